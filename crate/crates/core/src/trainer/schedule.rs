use serde::{Deserialize, Serialize};

/// Triangular cyclic learning rate: `base` to `max` over `half_cycle`
/// iterations, back down over the next `half_cycle`, repeating.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CyclicLr {
    pub base: f64,
    pub max: f64,
    pub half_cycle: usize,
}

pub fn cyclic_lr(iteration: usize, s: &CyclicLr) -> f64 {
    let l = s.half_cycle.max(1);
    let pos = iteration % (2 * l);
    let t = if pos <= l { pos } else { 2 * l - pos } as f64 / l as f64;
    s.base + (s.max - s.base) * t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wave_points() {
        let s = CyclicLr {
            base: 0.01,
            max: 0.1,
            half_cycle: 8,
        };
        assert_eq!(cyclic_lr(0, &s), 0.01);
        assert_eq!(cyclic_lr(8, &s), 0.1);
        assert_eq!(cyclic_lr(16, &s), 0.01);
        assert_eq!(cyclic_lr(24, &s), 0.1);
        assert!((cyclic_lr(4, &s) - 0.055).abs() < 1e-15);
        assert_eq!(cyclic_lr(4, &s), cyclic_lr(12, &s));
    }
}
