use std::collections::HashMap;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

use super::Palette;

/// A box of distinct colors with pixel counts.
struct ColorBox {
    colors: Vec<([u8; 3], usize)>,
    count: usize,
}

impl ColorBox {
    fn new(colors: Vec<([u8; 3], usize)>) -> Self {
        let count = colors.iter().map(|c| c.1).sum();
        Self { colors, count }
    }

    fn splittable(&self) -> bool {
        self.colors.len() > 1
    }

    fn widest_axis(&self) -> usize {
        let mut best = (0, 0u8);
        for axis in 0..3 {
            let lo = self.colors.iter().map(|c| c.0[axis]).min().unwrap_or(0);
            let hi = self.colors.iter().map(|c| c.0[axis]).max().unwrap_or(0);
            if hi - lo > best.1 {
                best = (axis, hi - lo);
            }
        }
        best.0
    }

    /// Splits at the weighted median along the widest axis. Colors equal to
    /// the median value on that axis go to the lower box unless that would
    /// leave the upper box empty.
    fn split(mut self) -> (ColorBox, ColorBox) {
        let axis = self.widest_axis();
        self.colors.sort_by_key(|c| (c.0[axis], c.0));
        let half = self.count.div_ceil(2);
        let mut seen = 0;
        let mut median_value = self.colors[0].0[axis];
        for c in &self.colors {
            seen += c.1;
            if seen >= half {
                median_value = c.0[axis];
                break;
            }
        }
        let max_value = self.colors.last().map(|c| c.0[axis]).unwrap_or(0);
        let cut = if median_value < max_value {
            self.colors.partition_point(|c| c.0[axis] <= median_value)
        } else {
            self.colors.partition_point(|c| c.0[axis] < median_value)
        };
        let upper = self.colors.split_off(cut);
        (ColorBox::new(self.colors), ColorBox::new(upper))
    }
}

/// Median-cut quantization to at most `k` colors.
pub fn median_cut(pixels: &[[u8; 3]], k: usize) -> Result<Palette> {
    if pixels.is_empty() {
        return Err(Error::InvalidInput("image has no pixels".into()));
    }
    if k == 0 {
        return Err(Error::InvalidInput("palette size must be >= 1".into()));
    }
    let mut histogram: HashMap<[u8; 3], usize> = HashMap::new();
    for p in pixels {
        *histogram.entry(*p).or_default() += 1;
    }
    let mut colors: Vec<([u8; 3], usize)> = histogram.into_iter().collect();
    colors.sort_unstable();
    let mut boxes = vec![ColorBox::new(colors)];

    while boxes.len() < k {
        // Largest pixel count first; earliest box wins ties.
        let Some(pick) = boxes
            .iter()
            .enumerate()
            .filter(|(_, b)| b.splittable())
            .max_by(|a, b| a.1.count.cmp(&b.1.count).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
        else {
            break;
        };
        let (lo, hi) = boxes.remove(pick).split();
        boxes.insert(pick, hi);
        boxes.insert(pick, lo);
    }

    let total = pixels.len() as f64;
    let kk = boxes.len();
    let mut centroids = Array2::zeros((kk, 3));
    let mut weights = Array1::zeros(kk);
    let mut lookup: HashMap<[u8; 3], usize> = HashMap::new();
    for (b_idx, b) in boxes.iter().enumerate() {
        let mut sum = [0.0f64; 3];
        for (c, cnt) in &b.colors {
            for axis in 0..3 {
                sum[axis] += c[axis] as f64 * *cnt as f64;
            }
            lookup.insert(*c, b_idx);
        }
        for axis in 0..3 {
            centroids[[b_idx, axis]] = sum[axis] / b.count as f64 / 255.0;
        }
        weights[b_idx] = b.count as f64 / total;
    }
    let assignment = pixels.iter().map(|p| lookup[p]).collect();
    Palette::new(centroids, weights, assignment)
}
