pub mod experiment;
pub mod gp;
pub mod scheduler;
pub mod searcher;
pub mod sim;
pub mod space;
