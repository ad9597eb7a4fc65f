//! Highlighted HTML rendering of a segmented report.

use super::SegmentedReport;

const STYLE: &str = "body { font-family: Georgia, serif; margin: 2em auto; max-width: 50em; }
.legend { margin-bottom: 1em; font-family: sans-serif; font-size: 0.9em; }
.legend span { padding: 2px 6px; margin-right: 8px; border-radius: 3px; }
pre.report { white-space: pre-wrap; font-family: inherit; font-size: 1em; line-height: 1.6; }
.dr { background: #b3d1ff; }
.fi { background: #b8e6b8; }
.ek { background: #ffb3b3; }";

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Wraps each segment of `report_text` in a `<span>` carrying its category
/// class. Uncovered text is emitted unwrapped; the original text is fully
/// preserved under HTML escaping.
pub fn render_html(report_text: &str, segmented: &SegmentedReport, title: &str) -> String {
    let mut body = String::new();
    let mut cursor = 0;
    for seg in &segmented.segments {
        body.push_str(&escape(&report_text[cursor..seg.start]));
        body.push_str(&format!(
            "<span class=\"{}\">{}</span>",
            seg.label.css_class(),
            escape(&report_text[seg.start..seg.end])
        ));
        cursor = seg.end;
    }
    body.push_str(&escape(&report_text[cursor..]));

    format!(
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>{}</title>\n<style>\n{}\n</style>\n</head>\n<body>\n<div class=\"legend\"><span class=\"dr\">Direct Reference</span><span class=\"fi\">Financial Interpretation</span><span class=\"ek\">External Knowledge</span></div>\n<pre class=\"report\">{}</pre>\n</body>\n</html>\n",
        escape(title),
        STYLE,
        body
    )
}

/// Test helper that inverts `render_html`: extracts the report body, strips
/// the span tags, and undoes escaping.
pub fn strip_rendered_report(html: &str) -> Option<String> {
    let start = html.find("<pre class=\"report\">")? + "<pre class=\"report\">".len();
    let end = html[start..].find("</pre>")? + start;
    let mut s = html[start..end].to_string();
    for label in ["dr", "fi", "ek"] {
        s = s.replace(&format!("<span class=\"{label}\">"), "");
    }
    s = s.replace("</span>", "");
    Some(s.replace("&lt;", "<").replace("&gt;", ">").replace("&amp;", "&"))
}
