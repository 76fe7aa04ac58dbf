//! Matplotlib scripts for the CSV files written by the other subcommands.

use std::path::Path;

use crate::commands::{BOUND_HEADER, SWEEP_HEADER};
use crate::error::{CliError, Result};

enum Schema {
    Series(Plot),
    /// Predicted-occupied points near the `z = 0` plane.
    Slice,
}

struct Plot {
    x: &'static str,
    y: &'static [&'static str],
    group: Option<&'static str>,
    logx: bool,
    logy: bool,
    title: &'static str,
}

fn schema_for(header: &[String]) -> Option<Schema> {
    let is = |cols: &[&str]| header.iter().map(String::as_str).eq(cols.iter().copied());
    let plot = |x, y, group, logx, logy, title| {
        Schema::Series(Plot {
            x,
            y,
            group,
            logx,
            logy,
            title,
        })
    };
    if is(&["step", "loss", "psnr_db"]) {
        Some(plot("step", &["psnr_db"], None, false, false, "Train PSNR"))
    } else if is(&SWEEP_HEADER) {
        Some(plot("N", &["minimal_params"], Some("label"), true, true, "Minimal parameters"))
    } else if is(&BOUND_HEADER) {
        Some(plot("seed", &["sigma0_sq", "rhs"], None, false, true, "Key bound per seed"))
    } else if is(&["n_in", "seed", "norm"]) {
        Some(plot("n_in", &["norm"], None, true, true, "Last-layer spectral norm"))
    } else if is(&["width", "seed", "sigma_min"]) {
        Some(plot("width", &["sigma_min"], None, true, true, "Smallest singular value"))
    } else if is(&["N", "seed", "ratio"]) {
        Some(plot("N", &["ratio"], None, true, false, "Loss at initialization"))
    } else if is(&["x", "y", "z", "occupancy", "predicted"]) {
        Some(Schema::Slice)
    } else {
        None
    }
}

fn py_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

const PRELUDE: &str = "import csv\nimport statistics\nfrom collections import defaultdict\n\nimport matplotlib.pyplot as plt\n\n";

fn render(csv_path: &Path, schema: &Schema) -> String {
    let mut s = String::from(PRELUDE);
    s.push_str(&format!(
        "with open({}, newline=\"\") as f:\n    rows = list(csv.DictReader(f))\n\n",
        py_str(&csv_path.to_string_lossy())
    ));
    let p = match schema {
        Schema::Slice => {
            s.push_str(
                "inside = [row for row in rows if float(row[\"predicted\"]) >= 0.5 and abs(float(row[\"z\"])) < 0.1]\n\
                 plt.scatter([float(row[\"x\"]) for row in inside], [float(row[\"y\"]) for row in inside], s=2)\n\
                 plt.gca().set_aspect(\"equal\")\n\
                 plt.xlabel(\"x\")\n\
                 plt.title(\"Occupancy slice\")\n\
                 plt.show()\n",
            );
            return s;
        }
        Schema::Series(p) => p,
    };
    let group = p.group.map_or("\"\"".to_string(), |g| format!("row[{}]", py_str(g)));
    s.push_str("series = defaultdict(lambda: defaultdict(list))\nfor row in rows:\n");
    for y in p.y {
        s.push_str(&format!(
            "    if row[{yq}] != \"\":\n        series[({group}, {yq})][float(row[{xq}])].append(float(row[{yq}]))\n",
            yq = py_str(y),
            xq = py_str(p.x),
        ));
    }
    s.push_str(
        "for (label, column), points in sorted(series.items()):\n\
         \x20   xs = sorted(points)\n\
         \x20   ys = [statistics.median(points[x]) for x in xs]\n\
         \x20   plt.plot(xs, ys, marker=\"o\", label=(label + \" \" + column).strip())\n\
         plt.legend()\n",
    );
    if p.logx {
        s.push_str("plt.xscale(\"log\")\n");
    }
    if p.logy {
        s.push_str("plt.yscale(\"log\")\n");
    }
    s.push_str(&format!(
        "plt.xlabel({})\nplt.title({})\nplt.tight_layout()\nplt.show()\n",
        py_str(p.x),
        py_str(p.title)
    ));
    s
}

/// A standalone script for the CSV at `csv_path`; the schema is recognized from its header.
pub fn plot_script(csv_path: &Path) -> Result<String> {
    let mut reader = csv::Reader::from_path(csv_path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(csv_path, io),
        other => CliError::config(format!("{}: {other:?}", csv_path.display())),
    })?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::config(format!("{}: {e}", csv_path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let schema = schema_for(&header).ok_or_else(|| {
        CliError::config(format!(
            "{}: unrecognized CSV columns {}",
            csv_path.display(),
            header.join(",")
        ))
    })?;
    Ok(render(csv_path, &schema))
}
