mod offset;
mod sweep;
mod train;
mod trajectory;
mod verify;

pub use offset::offset;
pub use sweep::sweep;
pub use train::train;
pub use trajectory::trajectory;
pub use verify::{verify, CHECKS};
