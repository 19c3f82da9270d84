use mcflab_core::{InitialData, PowerGraph, RadialGrid, Table};

fn grid() -> RadialGrid {
    RadialGrid::covering(2, 0.05, 5.0).unwrap()
}

#[test]
fn power_graph_mollification() {
    assert_eq!(PowerGraph::default_eps(1.5, 0.05), 0.1);
    assert_eq!(PowerGraph::default_eps(0.5, 0.05), 0.1);
    assert_eq!(PowerGraph::default_eps(2.0, 0.05), 0.0);
    let p = PowerGraph::new(0.5, 0.1).unwrap();
    assert_eq!(p.eval(0.0), 0.0);
    assert!((p.eval(1.0) - ((1.01f64).powf(0.25) - 0.1f64.sqrt())).abs() < 1e-15);
    assert_eq!(PowerGraph::new(3.0, 0.0).unwrap().eval(2.0), 8.0);
    assert!(PowerGraph::new(-1.0, 0.0).is_err());
    assert!(PowerGraph::new(1.0, -0.1).is_err());
}

#[test]
fn every_kind_builds_a_profile() {
    let kinds = [
        InitialData::PowerGraph {
            alpha: 1.5,
            eps_smooth: None,
        },
        InitialData::Translator { speed: 1.0 },
        InitialData::Expander { c: 1.0, slope: 1.0 },
        InitialData::Plane { height: 2.0 },
        InitialData::Tabulated {
            table: Table::new(vec![0.0, 10.0], vec![1.0, 11.0]).unwrap(),
        },
    ];
    for k in &kinds {
        let p = k.profile(grid()).unwrap();
        assert_eq!(p.len(), grid().len());
        assert_eq!(p.t(), 0.0);
    }
    assert_eq!(kinds[0].eps_smooth(0.05), Some(0.1));
    assert_eq!(kinds[1].eps_smooth(0.05), None);
    let tab = kinds[4].profile(grid()).unwrap();
    assert!((tab.u()[20] - 2.0).abs() < 1e-12);
}

#[test]
fn invalid_parameters_are_rejected() {
    let bad = [
        InitialData::PowerGraph {
            alpha: -1.0,
            eps_smooth: None,
        },
        InitialData::PowerGraph {
            alpha: 1.0,
            eps_smooth: Some(-1.0),
        },
        InitialData::Translator { speed: 0.0 },
        InitialData::Expander { c: 0.0, slope: 1.0 },
        InitialData::Expander {
            c: 1.0,
            slope: -1.0,
        },
        InitialData::Plane { height: f64::NAN },
    ];
    for k in bad {
        assert!(k.validate().is_err(), "{k:?}");
        assert!(k.profile(grid()).is_err());
    }
}

#[test]
fn table_parsing() {
    let t = Table::parse("# radius height\nr,u\n0, 0\n1, 1\n2 4\n\n3\t9 # last\n").unwrap();
    assert_eq!(t.r_max(), 3.0);
    assert_eq!(t.eval(1.5).unwrap(), 2.5);
    assert_eq!(t.eval(-1.0).unwrap(), 1.0);
    assert!(t.eval(3.5).is_err());
    assert!(Table::parse("0 0\n1 x\n").is_err());
    assert!(Table::parse("1 0\n2 1\n").is_err());
    assert!(Table::parse("0 0\n2 1\n1 3\n").is_err());
    assert!(Table::parse("0 0\n").is_err());
}

#[test]
fn short_table_does_not_cover_grid() {
    let t = Table::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
    assert!(InitialData::Tabulated { table: t }.profile(grid()).is_err());
}
