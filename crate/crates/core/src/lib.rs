pub mod bench;
pub mod cli;
pub mod export;
pub mod kkt;
pub mod model;
pub mod oracle;
pub mod reformulate;
pub mod solver;
pub mod svr;
