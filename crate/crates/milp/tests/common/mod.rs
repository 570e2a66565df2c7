pub mod oracle;
pub mod random_milp;
