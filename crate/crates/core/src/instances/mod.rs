//! Instance generation and the on-disk instance formats.

mod format;
mod generator;

pub use format::{
    parse_instance, read_instance_file, write_instance, InstanceFormat, ParseError, ParseErrorKind,
    ReadError,
};
pub use generator::{generate_instance, GeneratorConfig, GeneratorError};
