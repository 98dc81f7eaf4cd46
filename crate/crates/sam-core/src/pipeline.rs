//! Placeholder while the module set is built bottom-up.
