//! Minimal static SVG scatter chart for ratio tables. One series per
//! (policy, norm) pair, points indexed by instance.

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

pub fn scatter_chart(title: &str, series: &[Series]) -> String {
    let (w, h) = (640.0, 400.0);
    let (ml, mr, mt, mb) = (55.0, 20.0, 30.0, 40.0);
    let (pw, ph) = (w - ml - mr, h - mt - mb);
    let mut x_max = 1.0_f64;
    let mut y_max = 1.0_f64;
    for s in series {
        for &(x, y) in &s.points {
            x_max = x_max.max(x);
            y_max = y_max.max(y);
        }
    }
    y_max *= 1.05;
    let sx = |x: f64| ml + pw * x / x_max;
    let sy = |y: f64| mt + ph * (1.0 - y / y_max);

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n",
        w / 2.0
    ));
    out.push_str(&format!(
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"#444\"/>\n"
    ));
    for i in 0..=4 {
        let yv = y_max * i as f64 / 4.0;
        let y = sy(yv);
        out.push_str(&format!(
            "<line x1=\"{ml}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>\n",
            ml + pw
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{yv:.2}</text>\n",
            ml - 5.0,
            y + 4.0
        ));
    }
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">instance</text>\n",
        ml + pw / 2.0,
        h - 8.0
    ));
    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        for &(x, y) in &s.points {
            out.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\" fill-opacity=\"0.7\"/>\n",
                sx(x),
                sy(y)
            ));
        }
        let ly = mt + 14.0 * si as f64 + 12.0;
        out.push_str(&format!(
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"{color}\"/>\n",
            ml + 10.0,
            ly - 4.0
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{ly:.1}\">{}</text>\n",
            ml + 18.0,
            s.label
        ));
    }
    out.push_str("</svg>\n");
    out
}
