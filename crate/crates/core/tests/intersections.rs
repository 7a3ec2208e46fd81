mod common;

use common::{adapt, build, close, square, t_junction};
use netgrid::{pairwise, AffineGeometry, GridError, Intersection};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn globals(g: &AffineGeometry) -> Vec<Vec<f64>> {
    (0..g.corners().len()).map(|i| g.corner(i).to_vec()).collect()
}

#[test]
fn lonely_triangle_has_three_boundary_intersections() {
    let g = build(2, &[&[0., 0.], &[1., 0.], &[0., 1.]], &[&[0, 1, 2]]);
    let v = g.leaf_view();
    let is = v.intersections(v.elements()[0]).unwrap();
    assert_eq!(is.len(), 3);
    assert!(is.iter().all(|i| i.boundary() && i.neighbor() == 0));
    // Boundary intersection geometry is the facet itself.
    assert_eq!(globals(is[0].geometry()), vec![vec![0., 0.], vec![1., 0.]]);
}

#[test]
fn star_of_three_segments() {
    let g = build(1, &[&[0., 0.], &[1., 0.], &[-0.5, 0.8], &[-0.5, -0.8]], &[&[0, 1], &[0, 2], &[0, 3]]);
    let v = g.leaf_view();
    for &e in v.elements() {
        let is = v.intersections(e).unwrap();
        assert_eq!(is.len(), 2);
        assert_eq!(is[0].neighbor(), 2);
        assert_eq!(is[1].neighbor(), 0);
        for k in 0..2 {
            let o = is[0].outside(k).unwrap();
            assert_ne!(o, e);
            assert_eq!(is[0].index_in_outside(k).unwrap(), 0);
            assert_eq!(is[0].geometry_in_outside(k).unwrap().corner(0).as_slice(), &[0.0]);
        }
        assert_eq!(is[0].geometry_in_inside().mydim(), 0);
    }
}

#[test]
fn t_junction_groups_both_neighbors() {
    let g = t_junction();
    let v = g.leaf_view();
    let [a, b, c] = [v.elements()[0], v.elements()[1], v.elements()[2]];
    let is = v.intersections(a).unwrap();
    let shared = &is[0];
    assert_eq!(shared.index_in_inside(), 0);
    assert_eq!(shared.neighbor(), 2);
    let mut outs = vec![shared.outside(0).unwrap(), shared.outside(1).unwrap()];
    outs.sort();
    assert_eq!(outs, vec![b, c]);
    assert!(matches!(shared.outside(2), Err(GridError::NeighborIndex { index: 2, count: 2 })));
    // Outsides come ordered by persistent id.
    assert!(g.id(shared.outside(0).unwrap()).unwrap() < g.id(shared.outside(1).unwrap()).unwrap());
}

#[test]
fn fan_of_four() {
    let g = build(
        2,
        &[&[0., 0., 0.], &[0., 0., 1.], &[1., 0., 0.], &[0., 1., 0.], &[-1., 0., 0.], &[0., -1., 0.]],
        &[&[0, 1, 2], &[0, 1, 3], &[0, 1, 4], &[0, 1, 5]],
    );
    let v = g.leaf_view();
    for &e in v.elements() {
        assert_eq!(v.intersections(e).unwrap()[0].neighbor(), 3);
    }
}

#[test]
fn manifold_pair_maps_agree_in_world() {
    let g = square();
    let v = g.leaf_view();
    let (a, b) = (v.elements()[0], v.elements()[1]);
    let is = v.intersections(a).unwrap();
    let shared = is.iter().find(|i| i.neighbor() == 1).unwrap();
    assert_eq!(shared.outside(0).unwrap(), b);
    assert!(shared.outside(1).is_err());
    assert!(shared.index_in_outside(1).is_err());
    let ga = g.geometry(a).unwrap();
    let gb = g.geometry(b).unwrap();
    let gin = shared.geometry_in_inside();
    let gout = shared.geometry_in_outside(0).unwrap();
    // Each corner of the intersection maps to the same world point from both sides.
    for k in 0..2 {
        let xa = ga.global(gin.corner(k));
        let xb = gb.global(gout.corner(k));
        assert!(close(&xa, &xb, 1e-15), "{xa:?} vs {xb:?}");
    }
    let ib = v.intersections(b).unwrap();
    let back = ib.iter().find(|i| i.neighbor() == 1).unwrap();
    let na = shared.center_unit_outer_normal().unwrap();
    let nb = back.center_unit_outer_normal().unwrap();
    assert!(close(&na, &nb.iter().map(|x| -x).collect::<Vec<_>>(), 1e-10));
}

#[test]
fn normals_simple_cases() {
    let line = build(1, &[&[0., 0.], &[1., 0.]], &[&[0, 1]]);
    let v = line.leaf_view();
    let is = v.intersections(v.elements()[0]).unwrap();
    assert_eq!(is[1].unit_outer_normal(&[]).unwrap().as_slice(), &[1.0, 0.0]);
    assert_eq!(is[0].unit_outer_normal(&[]).unwrap().as_slice(), &[-1.0, 0.0]);

    let tri = build(2, &[&[0., 0., 0.], &[1., 0., 0.], &[0., 1., 0.]], &[&[0, 1, 2]]);
    let v = tri.leaf_view();
    let is = v.intersections(v.elements()[0]).unwrap();
    let n = is[0].unit_outer_normal(&[0.3]).unwrap();
    assert!(close(&n, &[0.0, -1.0, 0.0], 1e-15));
    assert!(is[0].unit_outer_normal(&[0.3, 0.1]).is_err());
}

#[allow(clippy::needless_range_loop)]
fn random_rotation(rng: &mut ChaCha8Rng) -> [[f64; 3]; 3] {
    let mut q = [[0.0; 3]; 3];
    for i in 0..3 {
        let mut v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        for j in 0..i {
            let p: f64 = (0..3).map(|k| v[k] * q[j][k]).sum();
            for k in 0..3 {
                v[k] -= p * q[j][k];
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        q[i] = v.map(|x| x / n);
    }
    q
}

fn apply(r: &[[f64; 3]; 3], x: &[f64]) -> Vec<f64> {
    (0..3).map(|i| (0..3).map(|j| r[i][j] * x[j]).sum()).collect()
}

#[test]
fn normals_rotate_with_the_element() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let r = random_rotation(&mut rng);
        let pts: Vec<Vec<f64>> = [[0., 0., 0.], [1., 0., 0.], [0., 1., 0.]].iter().map(|p| apply(&r, p)).collect();
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let g = build(2, &refs, &[&[0, 1, 2]]);
        let v = g.leaf_view();
        let n = v.intersections(v.elements()[0]).unwrap()[0].center_unit_outer_normal().unwrap();
        assert!(close(&n, &apply(&r, &[0., -1., 0.]), 1e-10));
    }
}

#[test]
fn hanging_node_fragments() {
    let mut g = square();
    let a = g.factory_element(0).unwrap();
    let b = g.factory_element(1).unwrap();
    adapt(&mut g, &[(b, 1)]);
    let v = g.leaf_view();
    let is = v.intersections(a).unwrap();
    let on_shared: Vec<&Intersection> = is.iter().filter(|i| i.index_in_inside() == 2).collect();
    assert_eq!(on_shared.len(), 2);
    assert!(on_shared.iter().all(|i| i.neighbor() == 1));
    let len: f64 = on_shared.iter().map(|i| i.geometry().volume().unwrap()).sum();
    assert!((len - 2f64.sqrt()).abs() < 1e-14);
    // From the fine side each fragment is half of the coarse facet.
    for child in g.children(b).unwrap() {
        for i in v.intersections(child).unwrap() {
            if i.neighbor() == 1 && i.outside(0).unwrap() == a {
                assert!((i.geometry().volume().unwrap() - 0.5 * 2f64.sqrt()).abs() < 1e-14);
            }
        }
    }
    // Level views stay conforming: no neighbors across levels.
    let l0 = g.level_view(0);
    let is0 = l0.intersections(a).unwrap();
    assert_eq!(is0.len(), 3);
    assert_eq!(is0[2].outside(0).unwrap(), b);
}

#[test]
fn pairwise_adapter_is_contiguous() {
    let g = t_junction();
    let v = g.leaf_view();
    let a = v.elements()[0];
    let groups = v.intersections(a).unwrap();
    let pairs: Vec<_> = pairwise(&groups).collect();
    assert_eq!(pairs.len(), 2 + 1 + 1);
    assert_eq!(pairs[0].index_in_inside(), 0);
    assert_eq!(pairs[1].index_in_inside(), 0);
    assert_ne!(pairs[0].outside(), pairs[1].outside());
    assert!(pairs[2].boundary() && pairs[2].outside().is_none());
    // Contiguity: once a geometry-in-inside is left it never reappears.
    let mut seen: Vec<*const AffineGeometry> = Vec::new();
    for p in &pairs {
        let key = p.geometry_in_inside() as *const _;
        if seen.last() != Some(&key) {
            assert!(!seen.contains(&key));
            seen.push(key);
        }
    }
}

#[test]
fn stale_element_is_rejected() {
    let mut g = square();
    let b = g.factory_element(1).unwrap();
    adapt(&mut g, &[(b, 1)]);
    let v = g.leaf_view();
    assert!(matches!(v.intersections(b), Err(GridError::StaleEntity(_))));
}
