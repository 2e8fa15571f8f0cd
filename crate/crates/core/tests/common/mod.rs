pub mod jacobian;
pub mod oracle;
