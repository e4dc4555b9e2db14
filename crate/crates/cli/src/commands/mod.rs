pub mod data;
pub mod evaluate;
pub mod teacher;
pub mod train;
