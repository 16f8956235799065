use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Polylines in millimetre coordinates, as produced by external tractography.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamlineSet {
    pub streamlines: Vec<Vec<[f64; 3]>>,
}

impl StreamlineSet {
    pub fn new(streamlines: Vec<Vec<[f64; 3]>>) -> Result<Self> {
        let set = StreamlineSet { streamlines };
        set.validate()?;
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.streamlines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.streamlines.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, line) in self.streamlines.iter().enumerate() {
            validate_polyline(line).map_err(|e| Error::Schema(format!("streamline {i}: {e}")))?;
        }
        Ok(())
    }
}

fn validate_polyline(line: &[[f64; 3]]) -> std::result::Result<(), String> {
    if line.len() < 2 {
        return Err(format!("needs at least 2 points, has {}", line.len()));
    }
    if let Some(k) = line.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
        return Err(format!("point {k} is not finite"));
    }
    if let Some(k) = line.windows(2).position(|w| w[0] == w[1]) {
        return Err(format!("points {k} and {} coincide", k + 1));
    }
    Ok(())
}

/// Cumulative arc length at each vertex; first entry is 0.
pub fn arc_lengths(line: &[[f64; 3]]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(line.len());
    out.push(0.0);
    for w in line.windows(2) {
        let d = [w[1][0] - w[0][0], w[1][1] - w[0][1], w[1][2] - w[0][2]];
        acc += (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        out.push(acc);
    }
    out
}

/// Arc length of the polyline point closest to `p` (first one on ties).
pub fn closest_arc(line: &[[f64; 3]], arcs: &[f64], p: [f64; 3]) -> f64 {
    let mut best = (f64::INFINITY, 0.0);
    for (k, w) in line.windows(2).enumerate() {
        let d = [w[1][0] - w[0][0], w[1][1] - w[0][1], w[1][2] - w[0][2]];
        let r = [p[0] - w[0][0], p[1] - w[0][1], p[2] - w[0][2]];
        let len2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        let t = ((r[0] * d[0] + r[1] * d[1] + r[2] * d[2]) / len2).clamp(0.0, 1.0);
        let e = [r[0] - t * d[0], r[1] - t * d[1], r[2] - t * d[2]];
        let dist2 = e[0] * e[0] + e[1] * e[1] + e[2] * e[2];
        if dist2 < best.0 {
            best = (dist2, arcs[k] + t * (arcs[k + 1] - arcs[k]));
        }
    }
    best.1
}

/// Point at arc length `s` (clamped to the polyline), given the vertex
/// arc lengths from [`arc_lengths`].
pub fn point_at(line: &[[f64; 3]], arcs: &[f64], s: f64) -> [f64; 3] {
    let total = *arcs.last().unwrap();
    let s = s.clamp(0.0, total);
    // first segment whose end reaches s
    let seg = arcs[1..].partition_point(|&a| a < s).min(line.len() - 2);
    let (a0, a1) = (arcs[seg], arcs[seg + 1]);
    let t = if a1 > a0 { (s - a0) / (a1 - a0) } else { 0.0 };
    let (p, q) = (line[seg], line[seg + 1]);
    [
        p[0] + t * (q[0] - p[0]),
        p[1] + t * (q[1] - p[1]),
        p[2] + t * (q[2] - p[2]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_rejected() {
        let err = StreamlineSet::new(vec![vec![[0.0; 3]]]).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn repeated_point_rejected() {
        assert!(StreamlineSet::new(vec![vec![[0.0; 3], [0.0; 3]]]).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        assert!(StreamlineSet::new(vec![vec![[0.0; 3], [f64::NAN, 0.0, 0.0]]]).is_err());
    }

    #[test]
    fn point_at_interpolates() {
        let line = vec![[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [2.0, 3.0, 0.0]];
        let arcs = arc_lengths(&line);
        assert_eq!(arcs, vec![0.0, 2.0, 5.0]);
        assert_eq!(point_at(&line, &arcs, 1.0), [1.0, 0.0, 0.0]);
        assert_eq!(point_at(&line, &arcs, 3.5), [2.0, 1.5, 0.0]);
        assert_eq!(point_at(&line, &arcs, 9.0), [2.0, 3.0, 0.0]);
        assert_eq!(point_at(&line, &arcs, 0.0), [0.0, 0.0, 0.0]);
    }
}
