use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Block dimensions of the flow: `m` expanding directions, `n` contracting
/// ones, acting on lattices in dimension `d = m + n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dimensions {
    m: usize,
    n: usize,
}

impl Dimensions {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m < 1 || n < 1 {
            return Err(Error::validation(format!(
                "dimensions require m >= 1 and n >= 1, got m={m}, n={n}"
            )));
        }
        Ok(Dimensions { m, n })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Ambient dimension d = m + n.
    pub fn d(&self) -> usize {
        self.m + self.n
    }

    /// mn, the dimension of the horospherical parameter space.
    pub fn mn(&self) -> usize {
        self.m * self.n
    }
}

impl std::fmt::Display for Dimensions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(m={}, n={})", self.m, self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction() {
        let dims = Dimensions::new(2, 1).unwrap();
        assert_eq!(dims.d(), 3);
        assert_eq!(dims.mn(), 2);
        assert!(Dimensions::new(0, 1).is_err());
        assert!(Dimensions::new(1, 0).is_err());
    }
}
