pub mod gate;
pub mod pd;
pub mod release;
pub mod scan;
