pub mod archgen;
pub mod gradcheck;
pub mod oracles;
pub mod sigoracle;
