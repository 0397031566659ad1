//! Scalar formulas against values evaluated independently in 50-digit
//! arithmetic. Relative tolerance 1e-12 throughout.

#![allow(clippy::excessive_precision)]

use iabsim::channel::{
    antenna_gain_db, foliage_loss_db, path_loss_db, rain_loss_db, received_power_dbm, AntennaPattern, RainConfig,
};
use iabsim::geometry::{segment_strip_chord, Point, TreeLine};
use iabsim::network::{allocate_bandwidth, noise_power_dbm, NodeId, NodeLoad, ResourceSplit};
use iabsim::ris::{
    cascaded_channel, effective_gain, gain_upper_bound, ncr_forward, ncr_forward_with_noise, synthesize_los_channel,
    ComplexMatrix, NcrConfig, PhaseConfig,
};
use num_complex::Complex64;

mod common;

const TOL: f64 = 1e-12;

fn close(label: &str, got: f64, want: f64) {
    let rel = if want == 0.0 { got.abs() } else { ((got - want) / want).abs() };
    assert!(rel <= TOL, "{label}: got {got:.17}, want {want:.17} (relative error {rel:e})");
}

#[test]
fn path_loss() {
    close("1 m, 28 GHz", path_loss_db(1.0, 28.0, 2.0).db, 61.343160626844384423);
    close("100 m, 28 GHz", path_loss_db(100.0, 28.0, 2.0).db, 101.34316062684438442);
    close("100 m, 38 GHz", path_loss_db(100.0, 38.0, 2.0).db, 103.99567193233620314);
    close(
        "38 vs 28 GHz",
        path_loss_db(100.0, 38.0, 2.0).db - path_loss_db(100.0, 28.0, 2.0).db,
        2.6525113054918187122,
    );
    close("250 m, alpha 3", path_loss_db(250.0, 28.0, 3.0).db, 133.28136088700551271);
    let clamped = path_loss_db(0.3, 28.0, 2.0);
    assert!(clamped.clamped);
    close("0.3 m clamps to 1 m", clamped.db, 61.343160626844384423);
}

#[test]
fn foliage_loss() {
    close("100 m in leaf", foliage_loss_db(100.0, 0.0, 28.0), 66.904640162660878481);
    close("100 m out of leaf", foliage_loss_db(0.0, 100.0, 28.0), 35.374488568715717641);
    close("mixed at 38 GHz", foliage_loss_db(12.5, 40.0, 38.0), 66.579358220797731466);
    assert_eq!(foliage_loss_db(0.0, 0.0, 28.0), 0.0);
}

#[test]
fn antenna_gain() {
    let p = AntennaPattern::new(20.0, -5.0, 30f64.to_radians()).unwrap();
    assert_eq!(antenna_gain_db(0.0, &p), 20.0);
    assert_eq!(antenna_gain_db(15f64.to_radians(), &p), 20.0, "main-lobe edge is inclusive");
    assert_eq!(antenna_gain_db(-15f64.to_radians(), &p), 20.0);
    assert_eq!(antenna_gain_db(15.001f64.to_radians(), &p), -5.0);
    assert_eq!(antenna_gain_db(90f64.to_radians(), &p), -5.0);
    assert_eq!(antenna_gain_db(2.0 * std::f64::consts::PI, &p), 20.0, "angles wrap");
}

#[test]
fn rain_noise_and_composition() {
    let rain = RainConfig::new(0.2051, 0.9679).unwrap();
    close("rain 10 mm/hr over 1.5 km", rain_loss_db(10.0, 1500.0, &rain), 2.8573070939048515933);
    assert_eq!(rain_loss_db(0.0, 1500.0, &rain), 0.0);
    close("noise 100 MHz", noise_power_dbm(100e6, 0.0), -94.0);
    close(
        "composed p_rx",
        received_power_dbm(30.0, 20.0, path_loss_db(100.0, 28.0, 2.0).db, 1.0),
        -51.343160626844384423,
    );
}

#[test]
fn chord_through_strip() {
    let strip = TreeLine::new(Point::new(0.0, 0.0), 0.0, 1000.0, 5.0, true).unwrap();
    let chord = segment_strip_chord(Point::new(-50.0, -50.0), Point::new(50.0, 50.0), &strip);
    close("45 degree chord", chord, 7.071067811865475244);
}

#[test]
fn bandwidth_allocation() {
    let split = ResourceSplit::new(0.5, 400e6).unwrap();
    let donor = NodeId(0);
    let loads = [
        NodeLoad {
            node: donor,
            ue_count: 0,
            backhaul_donor: None,
        },
        NodeLoad {
            node: NodeId(1),
            ue_count: 2,
            backhaul_donor: Some(donor),
        },
        NodeLoad {
            node: NodeId(2),
            ue_count: 2,
            backhaul_donor: Some(donor),
        },
        NodeLoad {
            node: NodeId(3),
            ue_count: 4,
            backhaul_donor: None,
        },
    ];
    let a = allocate_bandwidth(&split, &loads);
    close("backhaul sbs1", a.backhaul_hz[&NodeId(1)], 100e6);
    close("backhaul sbs2", a.backhaul_hz[&NodeId(2)], 100e6);
    close("access with 4 UEs", a.access_hz_per_ue[&NodeId(3)], 50e6);
    close("access with 2 UEs", a.access_hz_per_ue[&NodeId(1)], 100e6);
}

#[test]
fn ncr_clamp() {
    let cfg = NcrConfig::new(Point::new(0.0, 0.0), 100.0, 40.0, 0.0).unwrap();
    assert_eq!(ncr_forward(-60.0, &cfg), 40.0);
    close("linear region", ncr_forward(-70.0, &cfg), 30.0);
    let out = ncr_forward_with_noise(-60.0, -90.0, &cfg);
    close("clamped signal", out.signal_dbm, 40.0);
    close("noise rides the effective gain", out.noise_dbm, 10.0);
}

#[test]
fn cascaded_products() {
    let c = |re, im| Complex64::new(re, im);
    let g_ru = [c(1.0, 2.0), c(-0.5, 0.25), c(0.0, -1.5)];
    let g_br = ComplexMatrix::from_rows(&[
        vec![c(0.3, -0.1), c(-1.0, 0.4)],
        vec![c(2.0, 0.0), c(0.1, 0.9)],
        vec![c(-0.7, -0.2), c(0.5, 0.5)],
    ])
    .unwrap();
    let phases = PhaseConfig::new(vec![0.4, -1.1, 2.9]).unwrap();
    let casc = cascaded_channel(&g_ru, &phases, &g_br).unwrap();
    close("cascade[0].re", casc[0].re, 0.29790453832245333263);
    close("cascade[0].im", casc[0].im, 0.68196421675872710987);
    close("cascade[1].re", casc[1].re, -2.0871241298812023707);
    close("cascade[1].im", casc[1].im, -1.2146913133764830451);
    let w = [c(0.6, 0.0), c(0.0, 0.8)];
    close("effective gain", effective_gain(&g_ru, &phases, &g_br, &w).unwrap(), 2.9125531465959822453);
    close("upper bound", gain_upper_bound(&g_ru, &g_br), 27.663471950602821724);

    let sum = cascaded_channel(
        &[c(1.0, 0.0), c(1.0, 0.0)],
        &PhaseConfig::zeros(2),
        &ComplexMatrix::from_rows(&[vec![c(1.0, 0.0)], vec![c(1.0, 0.0)]]).unwrap(),
    )
    .unwrap();
    close("two-element direct sum", sum[0].re, 2.0);

    let h = synthesize_los_channel(Point::new(0.0, 0.0), Point::new(120.0, 35.0), 16, 4, 28.0, 0.0).unwrap();
    assert_eq!((h.rows(), h.cols()), (4, 16));
    close("4x16 Frobenius norm", h.frobenius_norm_sqr(), 64.0);
}

#[test]
fn criterion_1_formula_oracles() {
    common::criterion(1, "formula oracles match to 1e-12", || {
        path_loss();
        foliage_loss();
        antenna_gain();
        rain_noise_and_composition();
        chord_through_strip();
        bandwidth_allocation();
        ncr_clamp();
        cascaded_products();
    });
}
