//! Self-contained SVG line charts of summary CSVs: one line per reward mode
//! (mean moving reward vs episode) with a mean ± std band, legend, and axis
//! labels. The SVG is pure text with no external references or renderer.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// One mode's summary curve as read from `summary_<mode>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummarySeries {
    pub mode: String,
    pub episodes: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Parses a summary CSV (comment lines, an `episode,mean,std` header, then
/// rows). Errors carry the file name and 1-based line number.
pub fn read_summary_csv(path: &Path) -> Result<SummarySeries> {
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("summary");
    let mode = name.strip_prefix("summary_").unwrap_or(name).to_string();
    let mut episodes = Vec::new();
    let mut mean = Vec::new();
    let mut std = Vec::new();
    let mut saw_header = false;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != "episode,mean,std" {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!(
                        "{}: expected header 'episode,mean,std', got '{line}'",
                        path.display()
                    ),
                });
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("{}: expected 3 fields, found {}", path.display(), fields.len()),
            });
        }
        let parse_field = |s: &str, what: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|e| Error::Parse {
                line: line_no,
                message: format!("{}: bad {what} '{s}': {e}", path.display()),
            })
        };
        let episode = fields[0].trim().parse::<usize>().map_err(|e| Error::Parse {
            line: line_no,
            message: format!("{}: bad episode '{}': {e}", path.display(), fields[0]),
        })?;
        episodes.push(episode);
        mean.push(parse_field(fields[1], "mean")?);
        std.push(parse_field(fields[2], "std")?);
    }
    if !saw_header {
        return Err(Error::Parse {
            line: 1,
            message: format!("{}: missing 'episode,mean,std' header", path.display()),
        });
    }
    Ok(SummarySeries {
        mode,
        episodes,
        mean,
        std,
    })
}

fn escape_xml(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn series_color(mode: &str, index: usize) -> &'static str {
    // Colorblind-safe palette; the two canonical modes get fixed colors so
    // charts stay comparable across runs.
    match mode {
        "scotil" => "#d95f02",
        "smmotil" => "#1b9e77",
        _ => {
            const EXTRA: [&str; 4] = ["#7570b3", "#e7298a", "#66a61e", "#e6ab02"];
            EXTRA[index % EXTRA.len()]
        }
    }
}

/// Formats an axis tick label compactly.
fn tick_label(value: f64) -> String {
    if value == value.trunc() && value.abs() < 1e7 {
        format!("{}", value as i64)
    } else {
        format!("{value:.2}")
    }
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 58.0;

/// Renders the chart. Every plotted point comes straight from the series
/// data; series must be nonempty and internally consistent.
pub fn render_svg(series: &[SummarySeries]) -> Result<String> {
    if series.is_empty() {
        return Err(Error::Validation("nothing to plot: no summary series".into()));
    }
    for s in series {
        if s.episodes.is_empty() {
            return Err(Error::Validation(format!(
                "summary for mode '{}' has no rows",
                s.mode
            )));
        }
        if s.episodes.len() != s.mean.len() || s.episodes.len() != s.std.len() {
            return Err(Error::Validation(format!(
                "summary for mode '{}' has ragged columns",
                s.mode
            )));
        }
    }

    let x_min = series
        .iter()
        .flat_map(|s| s.episodes.iter().copied())
        .min()
        .expect("nonempty") as f64;
    let x_max = series
        .iter()
        .flat_map(|s| s.episodes.iter().copied())
        .max()
        .expect("nonempty") as f64;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for (m, d) in s.mean.iter().zip(&s.std) {
            y_min = y_min.min(m - d);
            y_max = y_max.max(m + d);
        }
    }
    // Pad the value range so lines do not hug the frame; guard degenerate
    // spans (single episode, constant values).
    let y_pad = ((y_max - y_min) * 0.05).max(1e-9);
    let y_min = y_min - y_pad;
    let y_max = y_max + y_pad;
    let x_span = (x_max - x_min).max(1e-9);
    let y_span = y_max - y_min;

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |e: f64| MARGIN_LEFT + (e - x_min) / x_span * plot_w;
    let sy = |v: f64| MARGIN_TOP + (1.0 - (v - y_min) / y_span) * plot_h;

    let mut svg = String::new();
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<title>mean moving reward per episode</title>\n");
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));

    // Bands first so every mean line draws on top of all shading.
    for (i, s) in series.iter().enumerate() {
        let color = series_color(&s.mode, i);
        let mut d = String::from("M");
        for (j, e) in s.episodes.iter().enumerate() {
            d.push_str(&format!(
                " {:.2} {:.2}",
                sx(*e as f64),
                sy(s.mean[j] + s.std[j])
            ));
        }
        for (j, e) in s.episodes.iter().enumerate().rev() {
            d.push_str(&format!(
                " L {:.2} {:.2}",
                sx(*e as f64),
                sy(s.mean[j] - s.std[j])
            ));
        }
        d.push_str(" Z");
        svg.push_str(&format!(
            "<path d=\"{d}\" fill=\"{color}\" fill-opacity=\"0.18\" stroke=\"none\"/>\n"
        ));
    }
    for (i, s) in series.iter().enumerate() {
        let color = series_color(&s.mode, i);
        if s.episodes.len() == 1 {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                sx(s.episodes[0] as f64),
                sy(s.mean[0])
            ));
            continue;
        }
        let points: Vec<String> = s
            .episodes
            .iter()
            .zip(&s.mean)
            .map(|(e, m)| format!("{:.2},{:.2}", sx(*e as f64), sy(*m)))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
            points.join(" ")
        ));
    }

    // Frame and ticks.
    svg.push_str(&format!(
        "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n"
    ));
    let ticks = 5usize;
    for k in 0..=ticks {
        let frac = k as f64 / ticks as f64;
        let e = x_min + frac * (x_max - x_min);
        let x = sx(e);
        let y0 = MARGIN_TOP + plot_h;
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{y0:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" \
             stroke=\"#333333\" stroke-width=\"1\"/>\n",
            y0 + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\">{}</text>\n",
            y0 + 20.0,
            escape_xml(&tick_label(e.round()))
        ));
        let v = y_min + frac * y_span;
        let y = sy(v);
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{MARGIN_LEFT}\" y2=\"{y:.2}\" \
             stroke=\"#333333\" stroke-width=\"1\"/>\n",
            MARGIN_LEFT - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"end\">{}</text>\n",
            MARGIN_LEFT - 9.0,
            y + 4.0,
            escape_xml(&tick_label(v))
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\">episode</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 14.0
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">mean moving reward</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    ));

    // Legend, one entry per series.
    let legend_x = MARGIN_LEFT + plot_w + 14.0;
    for (i, s) in series.iter().enumerate() {
        let color = series_color(&s.mode, i);
        let y = MARGIN_TOP + 14.0 + i as f64 * 22.0;
        svg.push_str(&format!(
            "<line x1=\"{legend_x:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" \
             stroke=\"{color}\" stroke-width=\"3\"/>\n",
            legend_x + 24.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\">{}</text>\n",
            legend_x + 30.0,
            y + 4.0,
            escape_xml(&s.mode)
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Reads every `summary_*.csv` in `dir` (sorted by file name), renders the
/// chart, and writes `plot.svg` next to them. Errors when the directory
/// holds no summary files.
pub fn cmd_plot(dir: &Path) -> Result<PathBuf> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|entry| entry.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("summary_") && n.ends_with(".csv"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Validation(format!(
            "no summary_*.csv files in {}",
            dir.display()
        )));
    }
    let series: Vec<SummarySeries> = paths
        .iter()
        .map(|p| read_summary_csv(p))
        .collect::<Result<_>>()?;
    let svg = render_svg(&series)?;
    let out_path = dir.join("plot.svg");
    std::fs::write(&out_path, svg)?;
    Ok(out_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Minimal XML well-formedness check: prolog, balanced quoted
    /// attributes, properly nested tags, one root element.
    fn assert_well_formed_xml(text: &str) {
        let mut rest = text.trim_start();
        if let Some(after) = rest.strip_prefix("<?xml") {
            let end = after.find("?>").expect("unterminated XML prolog");
            rest = after[end + 2..].trim_start();
        }
        let mut stack: Vec<String> = Vec::new();
        let mut roots = 0usize;
        let mut chars = rest.char_indices().peekable();
        let bytes = rest;
        while let Some((i, c)) = chars.next() {
            if c != '<' {
                assert!(c != '>', "stray '>' outside a tag at byte {i}");
                continue;
            }
            let close = bytes[i + 1..].starts_with('/');
            let start = if close { i + 2 } else { i + 1 };
            // Find the matching '>', skipping quoted attribute values.
            let mut in_quote = false;
            let mut end = None;
            for (j, cj) in bytes[start..].char_indices() {
                match cj {
                    '"' => in_quote = !in_quote,
                    '>' if !in_quote => {
                        end = Some(start + j);
                        break;
                    }
                    _ => {}
                }
            }
            let end = end.expect("unterminated tag");
            assert!(!in_quote, "unbalanced quote in tag");
            let body = &bytes[start..end];
            let self_closing = body.ends_with('/');
            let name: String = body
                .chars()
                .take_while(|c| c.is_ascii_alphanumeric())
                .collect();
            assert!(!name.is_empty(), "empty tag name near byte {i}");
            if close {
                let open = stack.pop().unwrap_or_else(|| panic!("unmatched </{name}>"));
                assert_eq!(open, name, "mismatched closing tag");
            } else if !self_closing {
                if stack.is_empty() {
                    roots += 1;
                }
                stack.push(name);
            } else if stack.is_empty() {
                roots += 1;
            }
            // Advance the iterator past this tag.
            while let Some(&(j, _)) = chars.peek() {
                if j > end {
                    break;
                }
                chars.next();
            }
        }
        assert!(stack.is_empty(), "unclosed tags: {stack:?}");
        assert_eq!(roots, 1, "XML must have exactly one root element");
    }

    fn constant_series(mode: &str, value: f64, std: f64, len: usize) -> SummarySeries {
        SummarySeries {
            mode: mode.to_string(),
            episodes: (1..=len).collect(),
            mean: vec![value; len],
            std: vec![std; len],
        }
    }

    #[test]
    fn constant_series_renders_a_horizontal_polyline_and_flat_band() {
        let svg = render_svg(&[constant_series("scotil", 100.0, 0.0, 40)]).unwrap();
        assert_well_formed_xml(&svg);
        let polyline = svg
            .lines()
            .find(|l| l.starts_with("<polyline"))
            .expect("mean polyline present");
        let ys: Vec<&str> = polyline
            .split('"')
            .nth(1)
            .unwrap()
            .split(' ')
            .map(|pair| pair.split(',').nth(1).unwrap())
            .collect();
        assert!(ys.windows(2).all(|w| w[0] == w[1]), "line must be horizontal");
        // Zero std: the band's upper and lower edges coincide.
        let band = svg
            .lines()
            .find(|l| l.starts_with("<path"))
            .expect("band present");
        let d = band.split('"').nth(1).unwrap();
        let band_ys: std::collections::BTreeSet<&str> = d
            .split_whitespace()
            .filter(|t| t.contains('.'))
            .skip(1)
            .step_by(2)
            .collect();
        assert_eq!(band_ys.len(), 1, "zero-height band, got {band_ys:?}");
    }

    #[test]
    fn legend_lists_every_mode() {
        let svg = render_svg(&[
            constant_series("scotil", 50.0, 5.0, 10),
            constant_series("smmotil", 80.0, 2.0, 10),
        ])
        .unwrap();
        assert_well_formed_xml(&svg);
        assert!(svg.contains(">scotil</text>"));
        assert!(svg.contains(">smmotil</text>"));
        assert!(svg.contains("#d95f02"));
        assert!(svg.contains("#1b9e77"));
    }

    #[test]
    fn svg_is_self_contained() {
        let svg = render_svg(&[constant_series("smmotil", 1.0, 0.5, 5)]).unwrap();
        for forbidden in ["http://", "https://", "url(", "@import", "<script"] {
            let allowed = svg.matches(forbidden).count();
            let xmlns_hits = svg.matches("xmlns=\"http://www.w3.org/2000/svg\"").count();
            if forbidden == "http://" {
                assert_eq!(allowed, xmlns_hits, "only the xmlns may reference a URL");
            } else {
                assert_eq!(allowed, 0, "found {forbidden}");
            }
        }
    }

    #[test]
    fn empty_series_and_files_are_rejected() {
        assert!(render_svg(&[]).is_err());
        let empty = SummarySeries {
            mode: "scotil".into(),
            episodes: vec![],
            mean: vec![],
            std: vec![],
        };
        assert!(render_svg(&[empty]).is_err());
    }

    #[test]
    fn summary_csv_round_trips_through_the_reader() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("summary_smmotil.csv");
        std::fs::write(
            &path,
            "# moving_average_window = 50\nepisode,mean,std\n1,10,0\n2,17.5,2.5\n",
        )
        .unwrap();
        let series = read_summary_csv(&path).unwrap();
        assert_eq!(series.mode, "smmotil");
        assert_eq!(series.episodes, vec![1, 2]);
        assert_eq!(series.mean, vec![10.0, 17.5]);
        assert_eq!(series.std, vec![0.0, 2.5]);
    }

    #[test]
    fn malformed_summary_reports_file_and_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("summary_scotil.csv");
        std::fs::write(&path, "episode,mean,std\n1,oops,0\n").unwrap();
        match read_summary_csv(&path) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("summary_scotil.csv"), "{message}");
                assert!(message.contains("oops"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        std::fs::write(&path, "1,2,3\n").unwrap();
        assert!(matches!(
            read_summary_csv(&path),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn plot_command_reads_summaries_and_writes_svg() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("summary_scotil.csv"),
            "episode,mean,std\n1,5,1\n2,6,1\n3,7,0.5\n",
        )
        .unwrap();
        std::fs::write(
            dir.path().join("summary_smmotil.csv"),
            "episode,mean,std\n1,6,0.5\n2,8,0.5\n3,9,0.25\n",
        )
        .unwrap();
        // Distractor that must not be picked up.
        std::fs::write(dir.path().join("curve_scotil_0.csv"), "x\n").unwrap();
        let out = cmd_plot(dir.path()).unwrap();
        assert_eq!(out.file_name().unwrap(), "plot.svg");
        let svg = std::fs::read_to_string(&out).unwrap();
        assert_well_formed_xml(&svg);
        assert!(svg.contains(">scotil</text>") && svg.contains(">smmotil</text>"));

        let empty = tempfile::tempdir().unwrap();
        assert!(matches!(
            cmd_plot(empty.path()),
            Err(Error::Validation(_))
        ));
    }
}
