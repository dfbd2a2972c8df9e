//! Byte comparison of the SVG plotter against a frozen reference.
//! Regenerate with `WCOND_BLESS=1 cargo test --test svg_golden` after an
//! intentional change to the plot layout, and review the diff.

use std::path::Path;

use weightcond::bench::svg::{emit_svg, PlotOptions, Series};

fn fixture() -> String {
    // a fixed GD-like trace: two geometric decays and a plateau
    let fast: Vec<f64> = (0..40).map(|t| 0.5f64.powi(t)).collect();
    let slow: Vec<f64> = (0..40).map(|t| 0.9f64.powi(t)).collect();
    let plateau: Vec<f64> = (0..40).map(|t| 1e-3 + 0.8f64.powi(t)).collect();
    emit_svg(
        &[
            Series::indexed("fast", &fast),
            Series::indexed("slow", &slow),
            Series::indexed("plateau", &plateau),
        ],
        &PlotOptions {
            title: "Fixture <trace> & friends".into(),
            x_label: "iteration".into(),
            y_label: "loss".into(),
            log_y: true,
        },
    )
}

#[test]
fn matches_golden_file() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/fixture_plot.svg");
    let svg = fixture();
    if std::env::var_os("WCOND_BLESS").is_some() {
        std::fs::write(&path, &svg).unwrap();
    }
    let golden = std::fs::read_to_string(&path).expect("golden file present");
    assert_eq!(svg, golden);
}
