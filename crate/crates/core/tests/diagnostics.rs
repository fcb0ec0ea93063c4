use rbnsf::diagnostics::{analyze, moment_report, DefectKind, Quantity, WindowSpec};
use rbnsf::io::{write_snapshot_bin, RunArchive};
use rbnsf::mesh::Grid;
use rbnsf::monitors::ThetaExtension;
use rbnsf::operators::BoundaryClosure;
use rbnsf::scheme::State;
use rbnsf::thermo::GasLaw;

/// Two uniform states moving in opposite directions: the mean is at rest, the Reynolds
/// stress `R11 = rho u1^2 = 1` and the energy fluctuation `1/2 rho |u|^2 = 1/2`.
#[test]
fn two_snapshot_archive_closed_forms() {
    let grid = Grid::rayleigh_benard(4).unwrap();
    let law = GasLaw::new(1.4).unwrap();
    let ext = ThetaExtension::linear_blend(&grid, &BoundaryClosure::uniform(&grid, 1.0, 1.0)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let archive = RunArchive::new(dir.path());
    std::fs::create_dir_all(archive.snapshot_dir()).unwrap();
    for (m, u1) in [(1u64, 1.0), (2, -1.0)] {
        let mut s = State::uniform(&grid, 1.0, [u1, 0.0], 1.0);
        s.t = m as f64;
        write_snapshot_bin(&archive.snapshot_path(m, "bin"), grid.n1(), grid.n2(), m, &s).unwrap();
    }
    let snaps = archive.snapshots().unwrap();
    let a = analyze(&grid, &law, &ext, &snaps, WindowSpec { cadence: 1.0, m0: 0, m_ref: 2 }, true).unwrap();
    let area = 8.0;
    for k in 0..grid.n_cells() {
        assert!(a.mean[Quantity::M1.index()][k].abs() < 1e-15);
        assert!((a.mean[Quantity::Rho.index()][k] - 1.0).abs() < 1e-15);
        assert!((a.mean[Quantity::R11.index()][k] - 2.0).abs() < 1e-14);
        assert!((a.defect.get(DefectKind::R11)[k] - 1.0).abs() < 1e-12);
        assert!(a.defect.get(DefectKind::R12)[k].abs() < 1e-15);
        assert!(a.defect.get(DefectKind::R22)[k].abs() < 1e-12);
        assert!((a.defect.get(DefectKind::Energy)[k] - 0.5).abs() < 1e-12);
        // deviation of u1 about the mean is one
        assert!((a.deviation[Quantity::U1.index()][k] - 1.0).abs() < 1e-12);
    }
    assert!((a.reynolds_l1[1] - area).abs() < 1e-10);
    assert!((a.fluctuation_l1[1] - 0.5 * area).abs() < 1e-10);
    // after one sample the mean is the state itself
    assert!(a.reynolds_l1[0].abs() < 1e-12);
    assert_eq!(a.e2[1], [0.0; 12]);
}

#[test]
fn too_few_samples_for_moments() {
    assert!(moment_report(&[1.0; 7]).is_err());
    let m = moment_report(&[2.0; 8]).unwrap();
    assert_eq!(m.variance, 0.0);
    assert!(m.skewness.is_none() && m.excess_kurtosis.is_none());
}
