//! Self-emitted SVG figures: function-value curves per algorithm and, where
//! the geometry allows, a trajectory plot (barycentric projection for one
//! 2-simplex, unit square for two 1-simplices).

use std::fmt::Write as _;

use amwu::algorithms::TraceRecord;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn polyline(points: &[(f64, f64)], color: &str) -> String {
    let mut path = String::from("<polyline fill=\"none\" stroke=\"");
    path.push_str(color);
    path.push_str("\" stroke-width=\"1.5\" points=\"");
    for (x, y) in points {
        write!(path, "{x:.2},{y:.2} ").unwrap();
    }
    path.push_str("\"/>");
    path
}

/// Function value against iteration, one curve per labelled trace.
pub fn convergence_chart(curves: &[(String, Vec<(f64, f64)>)], title: &str) -> String {
    let (mut tmax, mut fmin, mut fmax) = (1.0_f64, f64::INFINITY, f64::NEG_INFINITY);
    for (_, pts) in curves {
        for &(t, f) in pts {
            tmax = tmax.max(t);
            fmin = fmin.min(f);
            fmax = fmax.max(f);
        }
    }
    if !fmin.is_finite() || fmax - fmin < 1e-15 {
        fmin -= 1.0;
        fmax += 1.0;
    }
    let pad = 0.05 * (fmax - fmin);
    let (fmin, fmax) = (fmin - pad, fmax + pad);
    let sx = |t: f64| MARGIN + (t / tmax) * (WIDTH - 2.0 * MARGIN);
    let sy = |f: f64| HEIGHT - MARGIN - ((f - fmin) / (fmax - fmin)) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    )
    .unwrap();
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    write!(
        svg,
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{title}</text>",
        WIDTH / 2.0
    )
    .unwrap();
    // axes
    write!(
        svg,
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/><line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>",
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN,
        t = MARGIN
    )
    .unwrap();
    // axis labels
    for k in 0..=4 {
        let t = tmax * k as f64 / 4.0;
        let f = fmin + (fmax - fmin) * k as f64 / 4.0;
        write!(
            svg,
            "<text x=\"{:.1}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{:.0}</text>",
            sx(t),
            HEIGHT - MARGIN + 16.0,
            t
        )
        .unwrap();
        write!(
            svg,
            "<text x=\"{}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{:.3}</text>",
            MARGIN - 6.0,
            sy(f) + 4.0,
            f
        )
        .unwrap();
    }
    for (i, (label, pts)) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(t, f)| (sx(t), sy(f))).collect();
        svg.push_str(&polyline(&scaled, color));
        write!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{color}\">{label}</text>",
            WIDTH - MARGIN - 130.0,
            MARGIN + 18.0 * (i as f64 + 1.0)
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

/// Trajectory figure keyed to the point shape: barycentric triangle for a
/// single 3-weight block, unit square of first coordinates for two 2-weight
/// blocks. Returns `None` for other shapes.
pub fn trajectory_chart(
    traces: &[(String, Vec<TraceRecord>)],
    block_dims: &[usize],
    title: &str,
) -> Option<String> {
    let project: Box<dyn Fn(&[f64]) -> (f64, f64)> = match block_dims {
        [3] => Box::new(|c: &[f64]| {
            // barycentric corners A=(0,0), B=(1,0), C=(0.5, sqrt(3)/2)
            let h = 3.0_f64.sqrt() / 2.0;
            (c[1] + 0.5 * c[2], h * c[2])
        }),
        [2, 2] => Box::new(|c: &[f64]| (c[0], c[2])),
        _ => return None,
    };

    let side = HEIGHT - 2.0 * MARGIN;
    let sx = |u: f64| MARGIN + u * side;
    let sy = |v: f64| HEIGHT - MARGIN - v * side;

    let mut svg = String::new();
    write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{HEIGHT}\" height=\"{HEIGHT}\" viewBox=\"0 0 {HEIGHT} {HEIGHT}\">"
    )
    .unwrap();
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    write!(
        svg,
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{title}</text>",
        HEIGHT / 2.0
    )
    .unwrap();
    // domain outline
    match block_dims {
        [3] => {
            let h = 3.0_f64.sqrt() / 2.0;
            write!(
                svg,
                "<polygon fill=\"none\" stroke=\"#888\" points=\"{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}\"/>",
                sx(0.0), sy(0.0), sx(1.0), sy(0.0), sx(0.5), sy(h)
            )
            .unwrap();
        }
        [2, 2] => {
            write!(
                svg,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{side:.2}\" height=\"{side:.2}\" fill=\"none\" stroke=\"#888\"/>",
                sx(0.0),
                sy(1.0)
            )
            .unwrap();
        }
        _ => unreachable!(),
    }
    for (i, (label, trace)) in traces.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<(f64, f64)> = trace
            .iter()
            .map(|rec| {
                let (u, v) = project(&rec.x.flatten());
                (sx(u), sy(v))
            })
            .collect();
        svg.push_str(&polyline(&pts, color));
        if let Some(&(x0, y0)) = pts.first() {
            write!(
                svg,
                "<circle cx=\"{x0:.2}\" cy=\"{y0:.2}\" r=\"3\" fill=\"{color}\"/>"
            )
            .unwrap();
        }
        write!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{color}\">{label}</text>",
            12.0,
            MARGIN + 18.0 * (i as f64 + 1.0) - 24.0
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    Some(svg)
}
