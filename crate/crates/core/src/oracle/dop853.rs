//! Dormand-Prince 8(5,3) for matrix-valued ODEs `Y' = f(t, Y)`.
//!
//! Tableau and step-size control follow Hairer's DOP853 (no dense output).
//! Error scaling is per column: each column of a fundamental matrix is an
//! independent solution, so its tolerance scales with its own magnitude.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

const C: [f64; 12] = [
    0.0,
    0.052_600_151_958_767_73,
    0.078_900_227_938_151_6,
    0.118_350_341_907_227_4,
    0.281_649_658_092_772_6,
    0.333_333_333_333_333_3,
    0.25,
    0.307_692_307_692_307_7,
    0.651_282_051_282_051_3,
    0.6,
    0.857_142_857_142_857_1,
    1.0,
];

const A: [[f64; 11]; 12] = [
    [0.0; 11],
    [
        0.052_600_151_958_767_73,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.019_725_056_984_537_9,
        0.059_175_170_953_613_7,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.029_587_585_476_806_85,
        0.0,
        0.088_762_756_430_420_54,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.241_365_134_159_266_7,
        0.0,
        -0.884_549_479_328_286_1,
        0.924_834_003_261_792,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.037_037_037_037_037_035,
        0.0,
        0.0,
        0.170_828_608_729_473_86,
        0.125_467_687_566_822_42,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.037_109_375,
        0.0,
        0.0,
        0.170_252_211_019_544_05,
        0.060_216_538_980_455_96,
        -0.017_578_125,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.037_092_000_118_504_79,
        0.0,
        0.0,
        0.170_383_925_712_239_98,
        0.107_262_030_446_373_28,
        -0.015_319_437_748_624_402,
        0.008_273_789_163_814_023,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.624_110_958_716_075_7,
        0.0,
        0.0,
        -3.360_892_629_446_941_4,
        -0.868_219_346_841_726,
        27.592_099_699_446_71,
        20.154_067_550_477_894,
        -43.489_884_181_069_96,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.477_662_536_438_264_34,
        0.0,
        0.0,
        -2.488_114_619_971_667_7,
        -0.590_290_826_836_843,
        21.230_051_448_181_193,
        15.279_233_632_882_423,
        -33.288_210_968_984_86,
        -0.020_331_201_708_508_627,
        0.0,
        0.0,
    ],
    [
        -0.937_142_430_085_987_3,
        0.0,
        0.0,
        5.186_372_428_844_064,
        1.091_437_348_996_729_5,
        -8.149_787_010_746_927,
        -18.520_065_659_996_96,
        22.739_487_099_350_505,
        2.493_605_552_679_652_3,
        -3.046_764_471_898_219_6,
        0.0,
    ],
    [
        2.273_310_147_516_538,
        0.0,
        0.0,
        -10.534_495_466_737_25,
        -2.000_872_058_224_862_5,
        -17.958_931_863_118_8,
        27.948_884_529_419_96,
        -2.858_998_277_135_023_5,
        -8.872_856_933_530_63,
        12.360_567_175_794_303,
        0.643_392_746_015_763_6,
    ],
];

const B: [f64; 12] = [
    0.054_293_734_116_568_765,
    0.0,
    0.0,
    0.0,
    0.0,
    4.450_312_892_752_409,
    1.891_517_899_314_500_3,
    -5.801_203_960_010_585,
    0.311_164_366_957_819_9,
    -0.152_160_949_662_516_1,
    0.201_365_400_804_030_34,
    0.044_710_615_727_772_59,
];

const ER: [f64; 12] = [
    0.013_120_044_994_194_88,
    0.0,
    0.0,
    0.0,
    0.0,
    -1.225_156_446_376_204_4,
    -0.495_758_949_657_250_2,
    1.664_377_182_454_986_4,
    -0.350_328_848_749_973_66,
    0.334_179_118_713_017_5,
    0.081_923_206_485_115_71,
    -0.022_355_307_863_886_294,
];

const BHH: [f64; 3] = [
    0.244_094_488_188_976_4,
    0.733_846_688_281_611_8,
    0.022_058_823_529_411_766,
];

#[derive(Debug, Clone, Copy)]
pub struct Dop853Options {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Initial step as a fraction of the interval; `None` picks one from `f`.
    pub initial_step: Option<f64>,
}

impl Default for Dop853Options {
    fn default() -> Self {
        Dop853Options {
            rtol: 1e-10,
            atol: 1e-13,
            max_steps: 2_000_000,
            initial_step: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn col_max(m: &CMatrix, j: usize) -> f64 {
    m.column(j).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// One step from `(t, y)` with `k[0] = f(t, y)` already set. Returns the new
/// state and the 5th and 3rd order error estimates.
fn step<F>(f: &mut F, t: f64, y: &CMatrix, hs: f64, k: &mut [CMatrix]) -> (CMatrix, CMatrix, CMatrix)
where
    F: FnMut(f64, &CMatrix) -> CMatrix,
{
    let (rows, cols) = y.shape();
    for s in 1..12 {
        let mut ys = y.clone();
        for (j, &a) in A[s][..s].iter().enumerate() {
            if a != 0.0 {
                ys += &k[j] * re(a * hs);
            }
        }
        k[s] = f(t + C[s] * hs, &ys);
    }
    let mut incr = CMatrix::zeros(rows, cols);
    let mut e5 = CMatrix::zeros(rows, cols);
    for s in 0..12 {
        if B[s] != 0.0 {
            incr += &k[s] * re(B[s]);
        }
        if ER[s] != 0.0 {
            e5 += &k[s] * re(ER[s]);
        }
    }
    let e3 = &incr - &k[0] * re(BHH[0]) - &k[8] * re(BHH[1]) - &k[11] * re(BHH[2]);
    (y + &incr * re(hs), e5, e3)
}

/// Integrates from `t0` to `t1` (either direction). `post_step` runs on each
/// accepted state, e.g. to re-impose a structural constraint.
pub fn integrate<F>(
    mut f: F,
    t0: f64,
    t1: f64,
    y0: CMatrix,
    opts: &Dop853Options,
    mut post_step: Option<&mut dyn FnMut(f64, &mut CMatrix)>,
) -> Result<(CMatrix, StepStats)>
where
    F: FnMut(f64, &CMatrix) -> CMatrix,
{
    let mut stats = StepStats::default();
    let span = t1 - t0;
    if span == 0.0 {
        return Ok((y0, stats));
    }
    let dir = span.signum();
    let (rows, cols) = y0.shape();
    let dim = (rows * cols) as f64;
    let mut t = t0;
    let mut y = y0;
    let mut k: Vec<CMatrix> = vec![CMatrix::zeros(rows, cols); 12];
    k[0] = f(t, &y);
    stats.evaluations += 1;

    let mut h = match opts.initial_step {
        Some(frac) => frac * span.abs(),
        None => {
            let d0 = y.norm();
            let d1 = k[0].norm();
            if d0 < 1e-5 || d1 < 1e-5 {
                1e-6
            } else {
                0.01 * d0 / d1
            }
        }
    }
    .min(span.abs());
    let mut last_rejected = false;

    while (t1 - t) * dir > 0.0 {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::StepUnderflow { t, h });
        }
        if h < 1e-14 * t.abs().max(span.abs()) {
            return Err(Error::StepUnderflow { t, h });
        }
        let mut last = false;
        if (t + dir * h - t1) * dir >= 0.0 {
            h = (t1 - t).abs();
            last = true;
        }
        let hs = dir * h;
        let (y_new, e5, e3) = step(&mut f, t, &y, hs, &mut k);
        stats.evaluations += 11;

        let mut err5 = 0.0;
        let mut err3 = 0.0;
        for j in 0..cols {
            let sk = opts.atol + opts.rtol * col_max(&y, j).max(col_max(&y_new, j));
            for i in 0..rows {
                err5 += (e5[(i, j)].norm() / sk).powi(2);
                err3 += (e3[(i, j)].norm() / sk).powi(2);
            }
        }
        let mut deno = err5 + 0.01 * err3;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let err = h * err5 / (dim * deno).sqrt();

        let fac11 = err.powf(0.125);
        if err <= 1.0 {
            stats.accepted += 1;
            t = if last { t1 } else { t + hs };
            y = y_new;
            if let Some(hook) = post_step.as_deref_mut() {
                hook(t, &mut y);
            }
            k[0] = f(t, &y);
            stats.evaluations += 1;
            let mut fac = (fac11 / 0.9).clamp(1.0 / 6.0, 3.0);
            if last_rejected {
                fac = fac.max(1.0);
            }
            h /= fac;
            last_rejected = false;
        } else {
            stats.rejected += 1;
            h /= (fac11 / 0.9).min(3.0);
            last_rejected = true;
        }
    }
    Ok((y, stats))
}
