//! Low-discrepancy points for the high-dimensional quadrature fallback:
//! Halton radical-inverse sequences with Cranley-Patterson random shifts.

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical inverse of `i` in base `b`.
fn radical_inverse(mut i: u64, b: u32) -> f64 {
    let bf = b as f64;
    let mut inv = 1.0 / bf;
    let mut x = 0.0;
    while i > 0 {
        x += (i % b as u64) as f64 * inv;
        i /= b as u64;
        inv /= bf;
    }
    x
}

/// Shifted Halton sequence in `dim` dimensions.
pub struct HaltonShifted {
    shifts: Vec<f64>,
}

impl HaltonShifted {
    /// `shifts` in [0,1)^dim; pass zeros for the plain sequence.
    pub fn new(shifts: Vec<f64>) -> Self {
        assert!(shifts.len() <= PRIMES.len(), "dimension too large");
        Self { shifts }
    }

    pub fn dim(&self) -> usize {
        self.shifts.len()
    }

    /// The `i`-th point (0-based), mapped into (0,1)^dim.
    pub fn point(&self, i: u64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.shifts.len());
        for (d, slot) in out.iter_mut().enumerate() {
            let v = radical_inverse(i + 1, PRIMES[d]) + self.shifts[d];
            let v = v - v.floor();
            // keep strictly inside the open cube for singular transforms
            *slot = v.clamp(1e-12, 1.0 - 1e-12);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_cube_mean_close_to_half() {
        let seq = HaltonShifted::new(vec![0.0, 0.0, 0.0]);
        let mut acc = [0.0f64; 3];
        let n = 4096;
        let mut p = [0.0f64; 3];
        for i in 0..n {
            seq.point(i, &mut p);
            for d in 0..3 {
                acc[d] += p[d];
            }
        }
        for d in 0..3 {
            assert!((acc[d] / n as f64 - 0.5).abs() < 2e-3);
        }
    }
}
