//! SVG badge showing a letter on the A..G scale.

use std::fmt::Write as _;

use crs_core::Letter;

pub const WIDTH: u32 = 240;
pub const HEIGHT: u32 = 48;

/// Green for A through red for G.
const RAMP: [&str; 7] = [
    "#1a9850", "#66bd63", "#a6d96a", "#fee08b", "#fdae61", "#f46d43", "#d73027",
];
const LETTERS: [Letter; 7] = [
    Letter::A,
    Letter::B,
    Letter::C,
    Letter::D,
    Letter::E,
    Letter::F,
    Letter::G,
];

pub fn render(score: Letter) -> String {
    let seg_w = (WIDTH - 2) / 7;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" role="img" aria-label="CRS score {score}">"#
    );
    let _ = writeln!(svg, "  <title>CRS score {score}</title>");
    for (i, letter) in LETTERS.iter().enumerate() {
        let x = 1 + i as u32 * seg_w;
        let active = *letter == score;
        let (y, h, opacity, stroke) = if active {
            (1, HEIGHT - 2, "1", r##" stroke="#222" stroke-width="2""##)
        } else {
            (10, HEIGHT - 20, "0.45", "")
        };
        let _ = writeln!(
            svg,
            r#"  <rect class="segment" data-letter="{letter}" data-active="{active}" x="{x}" y="{y}" width="{seg_w}" height="{h}" rx="3" fill="{}" fill-opacity="{opacity}"{stroke}/>"#,
            RAMP[i]
        );
        let (size, weight) = if active { (26, "bold") } else { (13, "normal") };
        let _ = writeln!(
            svg,
            r##"  <text x="{}" y="{}" font-family="Verdana,DejaVu Sans,sans-serif" font-size="{size}" font-weight="{weight}" text-anchor="middle" dominant-baseline="central" fill="#111">{letter}</text>"##,
            x + seg_w / 2,
            HEIGHT / 2
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_segments_one_active() {
        let svg = render(Letter::C);
        assert_eq!(svg.matches(r#"class="segment""#).count(), 7);
        assert_eq!(svg.matches(r#"data-active="true""#).count(), 1);
        assert!(svg.contains(r#"data-letter="C" data-active="true""#));
        assert!(svg.contains(&format!(r#"width="{WIDTH}" height="{HEIGHT}""#)));
        assert!(svg.contains(">A</text>") && svg.contains(">G</text>"));
    }

    #[test]
    fn ramp_runs_green_to_red() {
        let svg = render(Letter::A);
        let first = svg.find("#1a9850").unwrap();
        let last = svg.find("#d73027").unwrap();
        assert!(first < last);
    }
}
