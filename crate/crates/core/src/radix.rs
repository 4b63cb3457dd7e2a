//! Mixed-radix indexing. The first digit is the most significant, which makes
//! index order coincide with lexicographic order of the digit tuples.

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Radix {
    sizes: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl Radix {
    /// Returns `None` when the product of `sizes` overflows `usize`.
    pub fn new(sizes: Vec<usize>) -> Option<Self> {
        let mut strides = vec![0; sizes.len()];
        let mut total: usize = 1;
        for (i, &s) in sizes.iter().enumerate().rev() {
            strides[i] = total;
            total = total.checked_mul(s)?;
        }
        Some(Radix {
            sizes,
            strides,
            total,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    /// Number of digit tuples.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn encode(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.sizes.len());
        digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum()
    }

    pub fn decode_into(&self, mut index: usize, out: &mut [usize]) {
        for (i, &s) in self.strides.iter().enumerate() {
            out[i] = index / s;
            index %= s;
        }
    }

    pub fn decode(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0; self.sizes.len()];
        self.decode_into(index, &mut out);
        out
    }

    /// Advances `digits` to the next tuple in lexicographic order; returns
    /// `false` after the last tuple (wrapping to all zeros).
    pub fn increment(&self, digits: &mut [usize]) -> bool {
        for i in (0..digits.len()).rev() {
            digits[i] += 1;
            if digits[i] < self.sizes[i] {
                return true;
            }
            digits[i] = 0;
        }
        false
    }
}

/// Product of `sizes` as `u128`, saturating.
pub fn saturating_product(sizes: impl IntoIterator<Item = usize>) -> u128 {
    sizes
        .into_iter()
        .fold(1u128, |acc, s| acc.saturating_mul(s as u128))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_decode_lexicographic() {
        let r = Radix::new(vec![2, 3, 2]).unwrap();
        assert_eq!(r.total(), 12);
        let mut digits = vec![0; 3];
        let mut idx = 0;
        loop {
            assert_eq!(r.encode(&digits), idx);
            assert_eq!(r.decode(idx), digits);
            idx += 1;
            if !r.increment(&mut digits) {
                break;
            }
        }
        assert_eq!(idx, 12);
    }

    #[test]
    fn empty_radix_has_one_tuple() {
        let r = Radix::new(vec![]).unwrap();
        assert_eq!(r.total(), 1);
        assert_eq!(r.encode(&[]), 0);
    }

    #[test]
    fn overflow_is_reported() {
        assert!(Radix::new(vec![usize::MAX, 2]).is_none());
        assert_eq!(saturating_product([usize::MAX, usize::MAX, 4]), u128::MAX);
    }
}
