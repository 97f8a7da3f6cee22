//! Output plumbing: every artifact embeds the resolved config and its
//! content hash, so a run can be reproduced from any of its files.

use sha2::{Digest, Sha256};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

pub struct OutputWriter {
    dir: PathBuf,
    config_toml: String,
    config_hash: String,
    written: Vec<String>,
}

impl OutputWriter {
    pub fn new(dir: &Path, config_toml: String) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        let config_hash = sha256_hex(config_toml.as_bytes());
        Ok(OutputWriter {
            dir: dir.to_path_buf(),
            config_toml,
            config_hash,
            written: Vec::new(),
        })
    }

    pub fn files(&self) -> &[String] {
        &self.written
    }

    /// CSV with the config embedded as leading comment lines.
    pub fn write_csv(&mut self, name: &str, body: &str) -> io::Result<PathBuf> {
        let mut text = String::new();
        text.push_str(&format!("# config_sha256 = {}\n", self.config_hash));
        for line in self.config_toml.lines() {
            text.push_str("# ");
            text.push_str(line);
            text.push('\n');
        }
        text.push_str(body);
        self.write_raw(name, &text)
    }

    /// JSON summary carrying the config text and hash.
    pub fn write_json(&mut self, name: &str, mut value: serde_json::Value) -> io::Result<PathBuf> {
        if let serde_json::Value::Object(map) = &mut value {
            map.insert("config_sha256".into(), self.config_hash.clone().into());
            map.insert("config_toml".into(), self.config_toml.clone().into());
        }
        let text = serde_json::to_string_pretty(&value).expect("json serializes");
        self.write_raw(name, &text)
    }

    pub fn write_svg(&mut self, name: &str, body: &str) -> io::Result<PathBuf> {
        let text = body.replace(
            "<svg ",
            &format!("<!-- config_sha256 = {} -->\n<svg ", self.config_hash),
        );
        self.write_raw(name, &text)
    }

    fn write_raw(&mut self, name: &str, text: &str) -> io::Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, text)?;
        self.written.push(name.to_string());
        Ok(path)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

/// A minimal line plot: one polyline per series over a shared frame.
pub fn svg_line_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(&str, &[(f64, f64)])],
) -> String {
    let (w, h) = (640.0, 420.0);
    let (ml, mr, mt, mb) = (62.0, 18.0, 34.0, 46.0);
    let (pw, ph) = (w - ml - mr, h - mt - mb);
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for (_, s) in series {
        pts.extend_from_slice(s);
    }
    if pts.is_empty() {
        pts.push((0.0, 0.0));
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let pad = 0.04 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| mt + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">{title}</text>\n",
        ml + pw / 2.0
    );
    // frame and ticks
    svg.push_str(&format!(
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"#444\"/>\n"
    ));
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#444\"/>\n\
             <text x=\"{0}\" y=\"{3}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{4:.3}</text>\n",
            sx(fx),
            mt + ph,
            mt + ph + 5.0,
            mt + ph + 19.0,
            fx
        ));
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#444\"/>\n\
             <text x=\"{3}\" y=\"{4}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{5:.3}</text>\n",
            ml - 5.0,
            sy(fy),
            ml,
            ml - 8.0,
            sy(fy) + 4.0,
            fy
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{x_label}</text>\n",
        ml + pw / 2.0,
        h - 8.0
    ));
    svg.push_str(&format!(
        "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14 {})\">{y_label}</text>\n",
        mt + ph / 2.0,
        mt + ph / 2.0
    ));

    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
    for (k, (name, s)) in series.iter().enumerate() {
        let color = colors[k % colors.len()];
        let path: Vec<String> = s.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{color}\">{name}</text>\n",
            ml + 10.0,
            mt + 16.0 + 14.0 * k as f64
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
