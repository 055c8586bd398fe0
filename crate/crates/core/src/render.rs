//! SVG rendering of a single layout.

use std::fmt::Write as _;

use crate::layout::{Canvas, ElementCategory, Layout};

fn fill(category: ElementCategory) -> &'static str {
    match category {
        ElementCategory::Text => "#1f77b4",
        ElementCategory::Logo => "#d62728",
        ElementCategory::Underlay => "#2ca02c",
        ElementCategory::Embellishment => "#9467bd",
    }
}

/// Canvas background, saliency boxes as dashed outlines, then one filled
/// rectangle per element in document order. Output bytes depend only on the
/// inputs.
pub fn render_svg(layout: &Layout, canvas: Option<&Canvas>) -> String {
    let (width, height) = match canvas {
        Some(c) => (c.width, c.height),
        None => layout
            .elements
            .iter()
            .fold((1.0f64, 1.0f64), |(w, h), e| (w.max(e.bbox.right()), h.max(e.bbox.bottom()))),
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.2}" height="{height:.2}" viewBox="0 0 {width:.2} {height:.2}">"#
    );
    let _ = writeln!(out, r##"  <rect class="canvas" x="0" y="0" width="{width:.2}" height="{height:.2}" fill="#f7f7f7" stroke="#333333"/>"##);
    for s in canvas.map(|c| c.saliency.as_slice()).unwrap_or_default() {
        let b = s.bbox;
        let _ = writeln!(
            out,
            r##"  <rect class="saliency" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#ff7f0e" stroke-width="2" stroke-dasharray="6 4"/>"##,
            b.x, b.y, b.w, b.h
        );
    }
    for e in &layout.elements {
        let b = e.bbox;
        let _ = writeln!(
            out,
            r##"  <rect class="element {cat}" data-id="{id}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.45" stroke="{color}"/>"##,
            b.x,
            b.y,
            b.w,
            b.h,
            cat = e.category,
            id = e.id,
            color = fill(e.category),
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;
    use crate::layout::SaliencyRegion;
    use ElementCategory::*;

    #[test]
    fn one_rect_per_element_and_dashed_saliency() {
        let canvas = Canvas::new(
            "c",
            200.0,
            100.0,
            vec![SaliencyRegion::new(BBox::new(10.0, 10.0, 20.0, 20.0)), SaliencyRegion::new(BBox::new(50.0, 10.0, 20.0, 20.0))],
            vec![Text, Logo, Underlay],
        )
        .unwrap();
        let l = Layout::from_boxes(
            None,
            [(Text, BBox::new(1.0, 1.0, 5.0, 5.0)), (Logo, BBox::new(10.0, 1.0, 5.0, 5.0)), (Underlay, BBox::new(0.0, 0.0, 7.0, 7.0))],
        );
        let svg = render_svg(&l, Some(&canvas));
        assert_eq!(svg.matches(r#"class="element "#).count(), 3);
        assert_eq!(svg.matches("stroke-dasharray").count(), 2);
        assert_eq!(svg, render_svg(&l, Some(&canvas)));
        assert!(render_svg(&l, None).contains(r#"width="15.00""#));
    }
}
