mod common;

use common::{polygon_area, polygons_intersect, rect_corners};
use ethiplan::collision::{
    collision_probability, mahalanobis_distance, mahalanobis_probability, sat_overlap, Cov2, Frame,
    GaussianPrediction, OrientedBox,
};
use ethiplan::geometry::Vec2;
use proptest::prelude::*;
use std::f64::consts::FRAC_PI_4;

fn obb(x: f64, y: f64, h: f64, hl: f64, hw: f64) -> OrientedBox {
    OrientedBox::new(Vec2::new(x, y), h, hl, hw).unwrap()
}

fn gaussian(mx: f64, my: f64, cov: Cov2) -> GaussianPrediction {
    GaussianPrediction {
        mean: Vec2::new(mx, my),
        covariance: cov,
        step: 0,
        frame: Frame::World,
    }
}

#[test]
fn identical_boxes_overlap_far_boxes_do_not() {
    let a = obb(3.0, -2.0, 0.7, 1.0, 0.5);
    assert!(sat_overlap(&a, &a));
    assert!(!sat_overlap(&obb(0.0, 0.0, 0.0, 0.5, 0.5), &obb(100.0, 0.0, 0.0, 0.5, 0.5)));
}

#[test]
fn rotated_pair_matches_clipping_oracle() {
    // 2x1 boxes, 45 degrees apart, 1.2 m between centers
    let a = obb(0.0, 0.0, 0.0, 1.0, 0.5);
    let b = obb(1.2, 0.0, FRAC_PI_4, 1.0, 0.5);
    let pa = rect_corners(0.0, 0.0, 0.0, 1.0, 0.5);
    let pb = rect_corners(1.2, 0.0, FRAC_PI_4, 1.0, 0.5);
    assert_eq!(sat_overlap(&a, &b), polygons_intersect(&pa, &pb));
    assert!(sat_overlap(&a, &b));
}

#[test]
fn clipping_oracle_sanity() {
    let a = rect_corners(0.0, 0.0, 0.0, 1.0, 1.0);
    let b = rect_corners(1.0, 1.0, 0.0, 1.0, 1.0);
    assert!((polygon_area(&common::clip_polygon(&a, &b)) - 1.0).abs() < 1e-12);
    assert!(!polygons_intersect(&a, &rect_corners(5.0, 0.0, 0.3, 1.0, 1.0)));
}

#[test]
fn mahalanobis_examples() {
    let id = Cov2::new(1.0, 0.0, 1.0).unwrap();
    assert_eq!(mahalanobis_distance(Vec2::new(2.0, 1.0), &gaussian(2.0, 1.0, id)).unwrap(), 0.0);
    let d = mahalanobis_distance(Vec2::new(3.0, 4.0), &gaussian(0.0, 0.0, id)).unwrap();
    assert!((d - 5.0).abs() < 1e-12);
    let diag = Cov2::new(4.0, 0.0, 1.0).unwrap();
    let d = mahalanobis_distance(Vec2::new(2.0, 0.0), &gaussian(0.0, 0.0, diag)).unwrap();
    assert!((d - 1.0).abs() < 1e-12);
}

#[test]
fn singular_covariance_is_rejected() {
    assert!(Cov2::new(1.0, 1.0, 1.0).is_err());
    let near = Cov2 { xx: 1e-7, xy: 0.0, yy: 1e-7 };
    assert!(mahalanobis_distance(Vec2::new(0.0, 0.0), &gaussian(1.0, 0.0, near)).is_err());
}

#[test]
fn probability_examples() {
    assert_eq!(mahalanobis_probability(0.0), 1.0);
    assert!((mahalanobis_probability(5.0) - 3.727e-6).abs() < 1e-9);
    assert_eq!(mahalanobis_probability(f64::INFINITY), 0.0);
}

#[test]
fn gate_short_circuits() {
    let ego = obb(0.0, 0.0, 0.0, 2.0, 1.0);
    let other = obb(50.0, 0.0, 0.0, 2.0, 1.0);
    // a singular covariance would error if the second stage ran
    let bad = Cov2 { xx: 0.0, xy: 0.0, yy: 0.0 };
    let est = collision_probability(&ego, Vec2::new(0.0, 0.0), &gaussian(50.0, 0.0, bad), &other).unwrap();
    assert!(!est.sat);
    assert_eq!(est.mahalanobis, None);
    assert_eq!(est.probability, 0.0);
}

#[test]
fn overlapping_probabilities() {
    let ego = obb(0.0, 0.0, 0.0, 2.0, 1.0);
    let id = Cov2::new(1.0, 0.0, 1.0).unwrap();
    let at_mean = collision_probability(&ego, Vec2::new(0.0, 0.0), &gaussian(0.0, 0.0, id), &ego).unwrap();
    assert_eq!(at_mean.probability, 1.0);
    let other = obb(1.0, 1.0, 0.0, 2.0, 1.0);
    let est = collision_probability(&ego, Vec2::new(0.0, 0.0), &gaussian(1.0, 1.0, id), &other).unwrap();
    assert!(est.sat);
    assert!((est.probability - (-1.0f64).exp()).abs() < 1e-12);
}

proptest! {
    #![proptest_config(common::cases(2000))]

    #[test]
    fn sat_agrees_with_clipping(
        ax in -3.0f64..3.0, ay in -3.0f64..3.0, ah in -3.2f64..3.2, al in 0.1f64..3.0, aw in 0.1f64..2.0,
        bx in -3.0f64..3.0, by in -3.0f64..3.0, bh in -3.2f64..3.2, bl in 0.1f64..3.0, bw in 0.1f64..2.0,
    ) {
        let sat = sat_overlap(&obb(ax, ay, ah, al, aw), &obb(bx, by, bh, bl, bw));
        let oracle = polygons_intersect(&rect_corners(ax, ay, ah, al, aw), &rect_corners(bx, by, bh, bl, bw));
        prop_assert_eq!(sat, oracle);
    }

    #[test]
    fn sat_is_symmetric(
        ax in -3.0f64..3.0, ay in -3.0f64..3.0, ah in -3.2f64..3.2,
        bx in -3.0f64..3.0, by in -3.0f64..3.0, bh in -3.2f64..3.2,
    ) {
        let a = obb(ax, ay, ah, 1.5, 0.6);
        let b = obb(bx, by, bh, 0.8, 0.8);
        prop_assert_eq!(sat_overlap(&a, &b), sat_overlap(&b, &a));
    }

    #[test]
    fn mahalanobis_matches_explicit_inverse(
        l11 in 0.2f64..3.0, l21 in -2.0f64..2.0, l22 in 0.2f64..3.0,
        px in -5.0f64..5.0, py in -5.0f64..5.0,
    ) {
        // Sigma = L L^T with L lower triangular
        let cov = Cov2::new(l11 * l11, l11 * l21, l21 * l21 + l22 * l22).unwrap();
        let d = mahalanobis_distance(Vec2::new(px, py), &gaussian(0.0, 0.0, cov)).unwrap();
        // forward substitution: z = L^-1 p, D = |z|
        let z1 = px / l11;
        let z2 = (py - l21 * z1) / l22;
        prop_assert!((d - z1.hypot(z2)).abs() <= 1e-9 * (1.0 + d));
    }
}
