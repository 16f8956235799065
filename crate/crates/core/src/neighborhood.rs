//! The 5x5x5 voxel neighbourhood and its direction classes.

/// Half-width of the cubic neighbourhood.
pub const RADIUS: i64 = 2;
/// Offsets in a 5x5x5 cube, centre excluded.
pub const N_OFFSETS: usize = 124;
/// Distinct directions among the offsets once reduced to coprime form.
pub const N_DIRECTION_CLASSES: usize = 98;

/// Neighbourhood offsets and the direction class of each.
///
/// Offsets are ordered lexicographically by `(dz, dy, dx)`, which is also
/// ascending order of their flat-index displacement on any grid wider than
/// the neighbourhood. Graph construction relies on this to emit sorted rows.
#[derive(Debug, Clone)]
pub struct NeighborhoodSpec {
    offsets: Vec<[i64; 3]>,
    class_of: Vec<usize>,
    classes: Vec<[i64; 3]>,
    opposite: Vec<usize>,
}

impl Default for NeighborhoodSpec {
    fn default() -> Self {
        Self::new()
    }
}

impl NeighborhoodSpec {
    pub fn new() -> Self {
        let mut offsets = Vec::with_capacity(N_OFFSETS);
        for dz in -RADIUS..=RADIUS {
            for dy in -RADIUS..=RADIUS {
                for dx in -RADIUS..=RADIUS {
                    if (dx, dy, dz) != (0, 0, 0) {
                        offsets.push([dx, dy, dz]);
                    }
                }
            }
        }
        let mut classes: Vec<[i64; 3]> = Vec::new();
        let class_of = offsets
            .iter()
            .map(|&o| {
                let c = coprime_form(o);
                match classes.iter().position(|&k| k == c) {
                    Some(i) => i,
                    None => {
                        classes.push(c);
                        classes.len() - 1
                    }
                }
            })
            .collect();
        let opposite = offsets
            .iter()
            .map(|o| {
                let neg = [-o[0], -o[1], -o[2]];
                offsets.iter().position(|&p| p == neg).unwrap()
            })
            .collect();
        NeighborhoodSpec {
            offsets,
            class_of,
            classes,
            opposite,
        }
    }

    pub fn offsets(&self) -> &[[i64; 3]] {
        &self.offsets
    }

    /// Direction classes in coprime integer form.
    pub fn unique_directions(&self) -> &[[i64; 3]] {
        &self.classes
    }

    /// The direction classes as unit vectors (isotropic voxels). Used as
    /// an ODF sampling scheme, every neighbour cone contains exactly one
    /// sample, so a constant ODF yields equal transition mass along every
    /// offset.
    pub fn unit_directions(&self) -> Vec<[f64; 3]> {
        self.classes
            .iter()
            .map(|c| {
                let n = ((c[0] * c[0] + c[1] * c[1] + c[2] * c[2]) as f64).sqrt();
                [c[0] as f64 / n, c[1] as f64 / n, c[2] as f64 / n]
            })
            .collect()
    }

    pub fn class_of(&self, offset_index: usize) -> usize {
        self.class_of[offset_index]
    }

    /// Index of the negated offset.
    pub fn opposite(&self, offset_index: usize) -> usize {
        self.opposite[offset_index]
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn coprime_form(o: [i64; 3]) -> [i64; 3] {
    let g = gcd(gcd(o[0], o[1]), o[2]);
    [o[0] / g, o[1] / g, o[2] / g]
}

/// Offset vector scaled to millimetres.
#[inline]
pub fn offset_mm(o: [i64; 3], voxel_size_mm: [f64; 3]) -> [f64; 3] {
    [
        o[0] as f64 * voxel_size_mm[0],
        o[1] as f64 * voxel_size_mm[1],
        o[2] as f64 * voxel_size_mm[2],
    ]
}
