use bwave_core::domain::{
    inner_l2, laplacian_apply, norm_h10, norm_hminus1, norm_l2, poincare_constant, spacetime_dot,
    ScalarField, SpaceTimeField, SpatialGrid, TimeGrid,
};
use bwave_core::optimizer::project;
use proptest::prelude::*;

fn grid() -> impl Strategy<Value = SpatialGrid> {
    prop_oneof![
        (2usize..40, 0.5f64..3.0).prop_map(|(n, l)| SpatialGrid::new_1d(l, n).unwrap()),
        (2usize..12, 2usize..12, 0.5f64..2.0, 0.5f64..2.0)
            .prop_map(|(a, b, l1, l2)| SpatialGrid::new_2d([l1, l2], [a, b]).unwrap()),
    ]
}

fn grid_with_fields() -> impl Strategy<Value = (SpatialGrid, ScalarField, ScalarField)> {
    grid().prop_flat_map(|g| {
        let v = prop::collection::vec(-1.0f64..1.0, g.len());
        let w = prop::collection::vec(-1.0f64..1.0, g.len());
        (Just(g), v.prop_map(ScalarField), w.prop_map(ScalarField))
    })
}

proptest! {
    #[test]
    fn poincare_inequality((g, v, _) in grid_with_fields()) {
        let l2 = norm_l2(&v, &g).unwrap();
        let h1 = norm_h10(&v, &g).unwrap();
        prop_assert!(l2 * l2 <= poincare_constant(&g) * h1 * h1 * (1.0 + 1e-12));
    }

    #[test]
    fn laplacian_is_symmetric((g, v, w) in grid_with_fields()) {
        let a = inner_l2(&laplacian_apply(&v, &g).unwrap(), &w, &g).unwrap();
        let b = inner_l2(&v, &laplacian_apply(&w, &g).unwrap(), &g).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (a.abs() + b.abs() + 1.0));
    }

    #[test]
    fn green_identity((g, v, _) in grid_with_fields()) {
        let a = -inner_l2(&laplacian_apply(&v, &g).unwrap(), &v, &g).unwrap();
        let h1 = norm_h10(&v, &g).unwrap();
        prop_assert!((a - h1 * h1).abs() <= 1e-9 * (a.abs() + 1.0));
    }

    #[test]
    fn hminus1_is_dominated_by_l2((g, v, _) in grid_with_fields()) {
        let hm = norm_hminus1(&v, &g).unwrap();
        prop_assert!(hm <= poincare_constant(&g).sqrt() * norm_l2(&v, &g).unwrap() * (1.0 + 1e-10));
    }

    #[test]
    fn duality_pairing_bound((g, v, w) in grid_with_fields()) {
        let pair = inner_l2(&v, &w, &g).unwrap().abs();
        let bound = norm_hminus1(&v, &g).unwrap() * norm_h10(&w, &g).unwrap();
        prop_assert!(pair <= bound * (1.0 + 1e-10) + 1e-14);
    }

    #[test]
    fn projection_is_idempotent_and_nonexpansive(
        a in prop::collection::vec(-3.0f64..3.0, 5 * 9),
        b in prop::collection::vec(-3.0f64..3.0, 5 * 9),
        lo in -1.0f64..0.0,
        width in 0.0f64..2.0,
    ) {
        let g = SpatialGrid::new_1d(1.0, 5).unwrap();
        let tg = TimeGrid::new(1.0, 8).unwrap();
        let field = |v: &[f64]| {
            let mut f = SpaceTimeField::zeros(&g, &tg);
            f.values_mut().copy_from_slice(v);
            f
        };
        let (fa, fb) = (field(&a), field(&b));
        let alpha = SpaceTimeField::constant(&g, &tg, lo);
        let beta = SpaceTimeField::constant(&g, &tg, lo + width);
        let pa = project(&fa, &alpha, &beta).unwrap();
        let pb = project(&fb, &alpha, &beta).unwrap();
        prop_assert_eq!(project(&pa, &alpha, &beta).unwrap(), pa.clone());
        let d = |x: &SpaceTimeField, y: &SpaceTimeField| {
            let e = x.sub(y);
            spacetime_dot(&e, &e, &tg, &g).sqrt()
        };
        prop_assert!(d(&pa, &pb) <= d(&fa, &fb) + 1e-14);
    }
}
