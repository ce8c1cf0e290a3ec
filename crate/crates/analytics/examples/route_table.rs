// Parses individual Combined Log Format lines and shows how the filters and
// the route table treat each one.

use ple_analytics::ops::{classify_request, is_api};
use ple_analytics::parse::parse_clf_line;
use ple_analytics::{BotPatterns, GeoTable, PartnerSet};

const LINES: &[&str] = &[
    r#"141.20.5.9 - - [02/May/2013:09:00:00 +0000] "POST /api/spaces?name=algebra HTTP/1.1" 201 312 "-" "Mozilla/5.0""#,
    r#"141.20.5.9 - - [02/May/2013:09:00:04 +0000] "POST /api/spaces/algebra/widgets?widget=function-plotter HTTP/1.1" 201 96 "-" "Mozilla/5.0""#,
    r#"141.20.9.1 - - [02/May/2013:09:01:00 +0000] "GET /api/spaces/algebra/widgets/w1/load?widget=function-plotter HTTP/1.1" 200 40 "-" "Mozilla/5.0""#,
    r#"141.20.9.1 - - [02/May/2013:09:02:00 +0000] "POST /api/spaces/algebra/members HTTP/1.1" 403 60 "-" "Mozilla/5.0""#,
    r#"137.226.4.4 - - [02/May/2013:09:03:00 +0000] "GET /api/spaces/algebra HTTP/1.1" 200 900 "-" "Mozilla/5.0""#,
    r#"66.249.1.1 - - [02/May/2013:09:04:00 +0000] "GET /api/spaces/algebra HTTP/1.1" 200 900 "-" "Googlebot/2.1""#,
    r#"141.20.5.9 - - [02/May/2013:09:05:00 +0000] "GET /widgets/mind-map/index.html HTTP/1.1" 200 5120 "-" "Mozilla/5.0""#,
    r#"not a log line"#,
];

pub fn main() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data/");
    let bots = BotPatterns::load(format!("{dir}bots.txt")).unwrap();
    let partners = PartnerSet::load(format!("{dir}partners.txt")).unwrap();
    let geo = GeoTable::load(format!("{dir}geo.csv")).unwrap();

    for line in LINES {
        let Some(entry) = parse_clf_line(line) else {
            println!("malformed      {line}");
            continue;
        };
        let verdict = if bots.is_bot(&entry.user_agent) {
            "bot".to_string()
        } else if partners.contains(&entry.ip) {
            "partner".to_string()
        } else if !is_api(entry.path()) {
            "static".to_string()
        } else {
            match classify_request(&entry) {
                Some(op) => format!("{} {}{}", op.kind.as_str(), op.space, op.widget.map(|w| format!(" {w}")).unwrap_or_default()),
                None => format!("unclassified ({})", entry.status),
            }
        };
        let place = geo.locate(&entry.ip);
        println!("{:<14} {:<32} {} {}", entry.ip, verdict, place.city, place.country);
    }
}
