//! Color transfer between images via palettes in normalized RGB.
//!
//! Each image is quantized by median cut into a weighted palette, a plan is
//! computed between the palettes, and every source color is replaced by the
//! row-normalized barycenter of the target colors it is sent to.

mod image_io;
mod median_cut;

use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

pub use image_io::{normalize, quantize, RgbImage};
pub use median_cut::median_cut;

use crate::error::{Error, Result};
use crate::exact::solve_exact;
use crate::measure::DiscreteMeasure;
use crate::method::{compute_plan, Method};
use crate::plan::{cost_matrix, l1_error, TransportPlan};
use crate::sinkhorn::SolverConfig;
use crate::sliced::SlicedConfig;

/// Palette size used for color transfer.
pub const DEFAULT_PALETTE_SIZE: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct Palette {
    centroids: Array2<f64>,
    weights: Array1<f64>,
    assignment: Vec<usize>,
}

impl Palette {
    pub fn new(
        centroids: Array2<f64>,
        weights: Array1<f64>,
        assignment: Vec<usize>,
    ) -> Result<Self> {
        let k = centroids.nrows();
        if centroids.ncols() != 3 || weights.len() != k || k == 0 {
            return Err(Error::InvalidInput(
                "palette needs K x 3 centroids and K weights".into(),
            ));
        }
        if centroids.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::InvalidInput(
                "centroids must lie in the unit cube".into(),
            ));
        }
        if weights.iter().any(|w| !(*w > 0.0)) || (weights.sum() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(
                "palette weights must be positive and sum to 1".into(),
            ));
        }
        if assignment.iter().any(|&a| a >= k) {
            return Err(Error::InvalidInput("assignment index out of range".into()));
        }
        Ok(Self {
            centroids,
            weights,
            assignment,
        })
    }

    pub fn len(&self) -> usize {
        self.centroids.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn centroids(&self) -> ArrayView2<'_, f64> {
        self.centroids.view()
    }

    pub fn weights(&self) -> ArrayView1<'_, f64> {
        self.weights.view()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }
}

pub fn palette_measure(palette: &Palette) -> Result<DiscreteMeasure> {
    DiscreteMeasure::new(palette.centroids.clone(), palette.weights.clone())
}

#[derive(Clone, Debug)]
pub struct Transfer {
    /// Recolored centroid per source palette entry.
    pub centroids: Array2<f64>,
    /// Source entries whose plan row was empty and were left unchanged.
    pub unchanged: Vec<usize>,
}

/// Barycentric projection: `new_i = Σ_j (P_ij / Σ_j' P_ij') y_j`, clamped to `[0, 1]³`.
pub fn transfer(source: &Palette, plan: &TransportPlan, target: &Palette) -> Result<Transfer> {
    let expected = (source.len(), target.len());
    if plan.shape() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            found: plan.shape(),
        });
    }
    let p = plan.entries();
    let mut centroids = source.centroids.clone();
    let mut unchanged = Vec::new();
    for (i, row) in p.rows().into_iter().enumerate() {
        let total: f64 = row.sum();
        if !(total > 0.0) {
            unchanged.push(i);
            continue;
        }
        for k in 0..3 {
            let v: f64 = row
                .iter()
                .zip(target.centroids.column(k))
                .map(|(w, y)| w * y)
                .sum::<f64>()
                / total;
            centroids[[i, k]] = v.clamp(0.0, 1.0);
        }
    }
    Ok(Transfer {
        centroids,
        unchanged,
    })
}

/// Paints every pixel with its palette entry's recolored centroid.
pub fn recolor(
    palette: &Palette,
    centroids: ArrayView2<'_, f64>,
    width: usize,
    height: usize,
) -> Result<RgbImage> {
    let pixels = palette
        .assignment
        .iter()
        .map(|&k| {
            let c = centroids.row(k);
            [quantize(c[0]), quantize(c[1]), quantize(c[2])]
        })
        .collect();
    RgbImage::new(width, height, pixels)
}

/// The source image rendered with its own palette.
pub fn quantized(palette: &Palette, width: usize, height: usize) -> Result<RgbImage> {
    recolor(palette, palette.centroids.view(), width, height)
}

#[derive(Clone, Debug)]
pub struct ColorTransferResult {
    pub image: RgbImage,
    pub plan: TransportPlan,
    pub exact_plan: TransportPlan,
    pub l1_vs_exact: f64,
    pub converged: bool,
    pub runtime_ms: f64,
    pub unchanged: Vec<usize>,
}

/// Quantizes both images, builds the method plan and the exact plan, and
/// recolors the source.
pub fn run_color_transfer(
    source_image: &RgbImage,
    target_image: &RgbImage,
    method: Method,
    palette_size: usize,
    solver: &SolverConfig,
    sliced: &SlicedConfig,
) -> Result<ColorTransferResult> {
    let sp = median_cut(&source_image.pixels, palette_size)?;
    let tp = median_cut(&target_image.pixels, palette_size)?;
    let (sm, tm) = (palette_measure(&sp)?, palette_measure(&tp)?);
    let cost = cost_matrix(&sm, &tm)?;
    let exact = solve_exact(&cost, &sm, &tm)?;
    let start = Instant::now();
    let (plan, converged) = if method == Method::Exact {
        (exact.plan.clone(), true)
    } else {
        let mp = compute_plan(method, &sm, &tm, &cost, sliced, solver)?;
        (mp.plan, mp.converged)
    };
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    let l1_vs_exact = l1_error(&plan, &exact.plan)?;
    let t = transfer(&sp, &plan, &tp)?;
    let image = recolor(
        &sp,
        t.centroids.view(),
        source_image.width,
        source_image.height,
    )?;
    Ok(ColorTransferResult {
        image,
        plan,
        exact_plan: exact.plan,
        l1_vs_exact,
        converged,
        runtime_ms,
        unchanged: t.unchanged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn pixels(v: &[[u8; 3]]) -> Vec<[u8; 3]> {
        v.to_vec()
    }

    #[test]
    fn few_colors_are_kept_exactly() {
        let px = pixels(&[
            [0, 0, 0],
            [255, 0, 0],
            [0, 0, 0],
            [10, 200, 30],
            [0, 0, 0],
            [255, 0, 0],
        ]);
        let p = median_cut(&px, 8).unwrap();
        assert_eq!(p.len(), 3);
        let mut got: Vec<(Vec<f64>, f64)> = p
            .centroids()
            .rows()
            .into_iter()
            .zip(p.weights())
            .map(|(c, w)| (c.to_vec(), *w))
            .collect();
        got.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        assert_eq!(got[0], (vec![0.0, 0.0, 0.0], 0.5));
        assert_eq!(
            got[1],
            (vec![10.0 / 255.0, 200.0 / 255.0, 30.0 / 255.0], 1.0 / 6.0)
        );
        assert_eq!(got[2], (vec![1.0, 0.0, 0.0], 1.0 / 3.0));
        for (px, &a) in px.iter().zip(p.assignment()) {
            let c = p.centroids().row(a).to_owned();
            assert_eq!(quantize(c[0]), px[0]);
        }
    }

    #[test]
    fn single_box_is_mean_color() {
        let px = pixels(&[[0, 0, 0], [255, 255, 255], [100, 50, 0], [1, 3, 5]]);
        let p = median_cut(&px, 1).unwrap();
        assert_eq!(p.len(), 1);
        let mean = [
            356.0 / 4.0 / 255.0,
            308.0 / 4.0 / 255.0,
            260.0 / 4.0 / 255.0,
        ];
        for k in 0..3 {
            assert!((p.centroids()[[0, k]] - mean[k]).abs() < 1e-15);
        }
        assert_eq!(p.weights()[0], 1.0);
    }

    #[test]
    fn splits_to_k_boxes_and_conserves_mass() {
        let px: Vec<[u8; 3]> = (0..1000u32)
            .map(|i| {
                [
                    (i * 7 % 256) as u8,
                    (i * 13 % 256) as u8,
                    (i * 31 % 256) as u8,
                ]
            })
            .collect();
        let p = median_cut(&px, 16).unwrap();
        assert_eq!(p.len(), 16);
        assert!((p.weights().sum() - 1.0).abs() <= 1e-12);
        assert_eq!(median_cut(&px, 16).unwrap(), p);
        assert!(median_cut(&[], 4).is_err());
        assert!(median_cut(&px, 0).is_err());
    }

    #[test]
    fn palette_measure_adapter() {
        let p = Palette::new(
            array![[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]],
            array![0.25, 0.75],
            vec![0, 1, 1, 1],
        )
        .unwrap();
        let m = palette_measure(&p).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.weights().to_vec(), vec![0.25, 0.75]);
    }

    #[test]
    fn transfer_examples() {
        let src = Palette::new(array![[0.5, 0.5, 0.5]], array![1.0], vec![0]).unwrap();
        let tgt = Palette::new(
            array![[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]],
            array![0.6, 0.4],
            vec![0, 1],
        )
        .unwrap();
        // Row (0.3, 0.2) scaled to carry the source mass of 1.
        let plan = TransportPlan::new(array![[0.6, 0.4]], array![1.0], array![0.6, 0.4]).unwrap();
        let t = transfer(&src, &plan, &tgt).unwrap();
        assert!((t.centroids[[0, 0]] - 0.4).abs() < 1e-15);
        let plan = TransportPlan::new(array![[0.3, 0.2]], array![0.5], array![0.3, 0.2]).unwrap();
        assert!((transfer(&src, &plan, &tgt).unwrap().centroids[[0, 0]] - 0.4).abs() < 1e-15);

        let two = Palette::new(
            array![[0.2, 0.2, 0.2], [0.9, 0.1, 0.3]],
            array![0.5, 0.5],
            vec![0, 1],
        )
        .unwrap();
        let tgt2 = Palette::new(
            array![[0.0, 0.5, 1.0], [1.0, 0.5, 0.0]],
            array![0.5, 0.5],
            vec![0, 1],
        )
        .unwrap();
        let diag = TransportPlan::new(
            array![[0.5, 0.0], [0.0, 0.5]],
            array![0.5, 0.5],
            array![0.5, 0.5],
        )
        .unwrap();
        assert_eq!(
            transfer(&two, &diag, &tgt2).unwrap().centroids,
            tgt2.centroids
        );

        let empty_row = TransportPlan::new(
            array![[0.0, 0.0], [0.5, 0.5]],
            array![0.5, 0.5],
            array![0.25, 0.25],
        )
        .unwrap();
        let t = transfer(&two, &empty_row, &tgt2).unwrap();
        assert_eq!(t.unchanged, vec![0]);
        assert_eq!(t.centroids.row(0), two.centroids.row(0));
    }

    #[test]
    fn two_color_images_match_brute_force() {
        let a =
            RgbImage::new(2, 2, vec![[0, 0, 0], [0, 0, 0], [0, 0, 0], [255, 255, 255]]).unwrap();
        let b = RgbImage::new(
            2,
            2,
            vec![[255, 0, 0], [0, 0, 255], [0, 0, 255], [0, 0, 255]],
        )
        .unwrap();
        let r = run_color_transfer(
            &a,
            &b,
            Method::Exact,
            256,
            &SolverConfig::default(),
            &SlicedConfig::default(),
        )
        .unwrap();
        let sp = median_cut(&a.pixels, 256).unwrap();
        let tp = median_cut(&b.pixels, 256).unwrap();
        let (sm, tm) = (palette_measure(&sp).unwrap(), palette_measure(&tp).unwrap());
        let c = cost_matrix(&sm, &tm).unwrap();
        let bf = crate::exact::brute_force_small(&c, &sm, &tm).unwrap();
        assert!((crate::plan::plan_cost(&c, &r.plan).unwrap() - bf).abs() < 1e-12);
        assert_eq!(r.l1_vs_exact, 0.0);
    }
}
