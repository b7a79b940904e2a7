pub mod charge;
pub mod cli;
pub mod cylinder;
pub mod extension;
pub mod lang;
pub mod lemmas;
pub mod numerics;
pub mod snz;
