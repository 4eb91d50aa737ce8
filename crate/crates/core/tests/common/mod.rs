#![allow(dead_code)]

use nullgeom::catalog::{monge_catalog, nullcone, resolve_surface, schwarzschild_horizon, warped6d_plane, CatalogPatch};

/// Resizes every axis of a catalog patch to `n` points.
pub fn with_points(mut cp: CatalogPatch, n: usize) -> CatalogPatch {
    let mut grid = cp.patch.grid().clone();
    grid.set_all_counts(n).unwrap();
    cp.patch.set_grid(grid).unwrap();
    cp
}

pub fn monge_patches(n: usize) -> Vec<CatalogPatch> {
    monge_catalog(3)
        .into_iter()
        .map(|f| with_points(resolve_surface(&format!("monge:{f}"), None).unwrap(), n))
        .collect()
}

/// Every catalog patch at `n` points per axis.
pub fn catalog_patches(n: usize) -> Vec<CatalogPatch> {
    let mut out = vec![
        with_points(schwarzschild_horizon(1.0).unwrap(), n),
        with_points(warped6d_plane().unwrap(), n),
        with_points(nullcone(2).unwrap(), n),
        with_points(nullcone(3).unwrap(), n),
    ];
    out.extend(monge_patches(n));
    out
}

/// Evenly strided subset of the grid.
pub fn strided(cp: &CatalogPatch, max: usize) -> Vec<Vec<f64>> {
    let all = cp.patch.grid().points();
    if all.len() <= max {
        return all;
    }
    (0..max).map(|i| all[i * all.len() / max].clone()).collect()
}

/// Grid points whose index is interior along every axis.
pub fn interior(cp: &CatalogPatch) -> Vec<Vec<f64>> {
    let grid = cp.patch.grid();
    (0..grid.len())
        .filter(|&flat| {
            grid.multi_index(flat).iter().zip(&grid.axes).all(|(&i, a)| i > 0 && i + 1 < a.n)
        })
        .map(|flat| {
            let idx = grid.multi_index(flat);
            idx.iter().zip(&grid.axes).map(|(&i, a)| a.nodes()[i]).collect()
        })
        .collect()
}
