pub mod oracle;
pub mod mc;
pub mod reductions;
pub mod guards;
