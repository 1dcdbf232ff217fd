use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{check_index, Error, Result};

/// Sample index `(b, n, t)`: BS antenna, sub-carrier, slot.
pub type SampleIndex = (usize, usize, usize);

/// Which received samples contribute to a Fisher matrix.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMask {
    /// Every `(b, n, t)`.
    #[default]
    All,
    /// Every sample received on one antenna.
    Antenna(usize),
    /// An explicit list, summed in the given order.
    Samples(Vec<SampleIndex>),
}

impl SampleMask {
    /// Explicit list; must be non-empty and free of duplicates.
    pub fn from_samples(samples: Vec<SampleIndex>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyMask);
        }
        let unique: BTreeSet<_> = samples.iter().collect();
        if unique.len() != samples.len() {
            return Err(Error::InvalidArgument("sample mask lists a sample twice".into()));
        }
        Ok(Self::Samples(samples))
    }

    pub fn single(b: usize, n: usize, t: usize) -> Self {
        Self::Samples(vec![(b, n, t)])
    }

    /// Slot `t` is received only on antenna `t`, at sub-carrier `n0`.
    pub fn case1(n_bs: usize, n0: usize) -> Self {
        Self::Samples((0..n_bs).map(|t| (t, n0, t)).collect())
    }

    /// Slot `t` is received only at sub-carrier `t`, on antenna `b0`.
    pub fn case2(n_subcarriers: usize, b0: usize) -> Self {
        Self::Samples((0..n_subcarriers).map(|t| (b0, t, t)).collect())
    }

    /// Expands the mask against the problem dimensions, checking every index.
    pub fn resolve(&self, n_bs: usize, n_subcarriers: usize, n_slots: usize) -> Result<Vec<SampleIndex>> {
        let grid = |antennas: std::ops::Range<usize>| {
            let mut out = Vec::with_capacity(antennas.len() * n_subcarriers * n_slots);
            for b in antennas {
                for n in 0..n_subcarriers {
                    for t in 0..n_slots {
                        out.push((b, n, t));
                    }
                }
            }
            out
        };
        let out = match self {
            Self::All => grid(0..n_bs),
            Self::Antenna(b) => {
                check_index("BS antenna", *b, n_bs)?;
                grid(*b..*b + 1)
            }
            Self::Samples(list) => {
                for &(b, n, t) in list {
                    check_index("BS antenna", b, n_bs)?;
                    check_index("sub-carrier", n, n_subcarriers)?;
                    check_index("slot", t, n_slots)?;
                }
                list.clone()
            }
        };
        if out.is_empty() {
            return Err(Error::EmptyMask);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_is_antenna_major() {
        let s = SampleMask::All.resolve(2, 2, 1).unwrap();
        assert_eq!(s, vec![(0, 0, 0), (0, 1, 0), (1, 0, 0), (1, 1, 0)]);
    }

    #[test]
    fn case_masks() {
        assert_eq!(SampleMask::case1(3, 1).resolve(3, 2, 3).unwrap(), vec![(0, 1, 0), (1, 1, 1), (2, 1, 2)]);
        assert_eq!(SampleMask::case2(2, 0).resolve(1, 2, 2).unwrap(), vec![(0, 0, 0), (0, 1, 1)]);
        assert!(SampleMask::case1(3, 0).resolve(3, 1, 2).is_err());
    }

    #[test]
    fn rejects_empty_duplicate_and_out_of_range() {
        assert_eq!(SampleMask::from_samples(vec![]), Err(Error::EmptyMask));
        assert!(SampleMask::from_samples(vec![(0, 0, 0), (0, 0, 0)]).is_err());
        assert!(SampleMask::single(0, 3, 0).resolve(1, 3, 1).is_err());
        assert!(SampleMask::Antenna(2).resolve(2, 1, 1).is_err());
        assert_eq!(SampleMask::All.resolve(0, 1, 1), Err(Error::EmptyMask));
    }

    #[test]
    fn json_shape() {
        let m = SampleMask::single(1, 2, 3);
        assert_eq!(serde_json::to_string(&m).unwrap(), r#"{"samples":[[1,2,3]]}"#);
        assert_eq!(serde_json::to_string(&SampleMask::All).unwrap(), r#""all""#);
    }
}
