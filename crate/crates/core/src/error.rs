use thiserror::Error;

/// A vector or matrix argument had the wrong shape.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
pub struct DimensionError {
    pub what: &'static str,
    pub expected: usize,
    pub actual: usize,
}

impl DimensionError {
    pub fn check(what: &'static str, expected: usize, actual: usize) -> Result<(), Self> {
        if expected == actual {
            Ok(())
        } else {
            Err(Self {
                what,
                expected,
                actual,
            })
        }
    }
}
