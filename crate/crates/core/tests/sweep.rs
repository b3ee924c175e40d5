use ldtensor::harness::{run, ExperimentConfig, Mode, Table};

fn column(table: &Table, name: &str) -> Vec<String> {
    let i = table.columns.iter().position(|c| *c == name).unwrap();
    table.rows.iter().map(|r| r[i].clone()).collect()
}

#[test]
fn phase_sweep_columns_and_shape() {
    let config = ExperimentConfig::from_json(
        r#"{"grid":{"n":[10,12],"r":[1,2,3,4,6],"k":[3]},"override_D":5,"samples":300,"seeds":[1,2]}"#,
    )
    .unwrap();
    let report = run(&config, Mode::Sweep).unwrap();
    let t = &report.table;
    assert_eq!(t.columns, vec!["n", "r", "k", "D", "coord_mse_empirical", "mmse_exact", "mmse_lower_bound"]);
    assert_eq!(t.rows.len(), 10);
    for (r, mse) in column(t, "r").iter().zip(column(t, "coord_mse_empirical")) {
        if r == "1" {
            assert_eq!(mse.parse::<f64>().unwrap(), 0.0);
        }
    }
    // the lower bound never decreases in r at fixed n
    let lower: Vec<f64> = column(t, "mmse_lower_bound").iter().map(|x| x.parse().unwrap()).collect();
    for block in lower.chunks(5) {
        assert!(block.windows(2).all(|w| w[1] >= w[0]), "{block:?}");
    }
}

#[test]
fn lower_bound_grows_with_rank() {
    let mut last = 0.0;
    for r in [10.0, 1e3, 1e5, 1e7, 1e9, 1e12] {
        let b = ldtensor::bound::theorem_bound(50.0, 3, 3, r, 0.5).mmse_lower_bound();
        assert!(b >= last);
        last = b;
    }
    assert!(last > 0.9);
}

#[test]
fn oracle_rows_are_reproducible() {
    let config = ExperimentConfig::default();
    let a = run(&config, Mode::Oracle).unwrap();
    let b = run(&config, Mode::Oracle).unwrap();
    assert_eq!(a.table, b.table);
    assert_eq!(a.table.rows.len(), 12);
    let mut buf = Vec::new();
    ldtensor::harness::write_csv(&mut buf, Mode::Oracle, &config, &a.table).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with('#')).count(), 2);
}
