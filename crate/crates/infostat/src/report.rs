//! Plain-text tables for metric, corpus and bridging reports.

use std::fmt::Write;

use infostat_core::corpus::{bucket_label, StatsReport, LENGTH_BUCKETS};
use infostat_core::eval::{MetricReport, Prf};
use infostat_core::ISCategory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RenderOptions {
    pub buckets: bool,
    pub confusion: bool,
}

impl RenderOptions {
    pub fn all() -> Self {
        RenderOptions {
            buckets: true,
            confusion: true,
        }
    }
}

fn pct(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

const PRF_HEADER: &str = "R      P      F      gold   pred   correct";

fn prf_row(out: &mut String, label: &str, p: &Prf) {
    let _ = writeln!(
        out,
        "{label:<24}{:<7}{:<7}{:<7}{:<7}{:<7}{}",
        pct(p.recall),
        pct(p.precision),
        pct(p.f1),
        p.gold,
        p.pred,
        p.correct
    );
}

pub fn render_prf(label: &str, p: &Prf) -> String {
    let mut out = format!("{:<24}{PRF_HEADER}\n", "");
    prf_row(&mut out, label, p);
    out
}

pub fn render_metrics(report: &MetricReport, options: &RenderOptions) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<24}{PRF_HEADER}", "");
    prf_row(&mut out, "mentions", &report.mention);
    out.push('\n');
    let _ = writeln!(out, "{:<24}{PRF_HEADER}", "IS category");
    for c in ISCategory::ALL {
        if let Some(p) = report.per_class.get(&c) {
            prf_row(&mut out, c.as_str(), p);
        }
    }
    if let Some(acc) = report.accuracy {
        let _ = writeln!(out, "{:<24}{}", "accuracy", pct(acc));
    }
    if let Some(overall) = &report.overall {
        prf_row(&mut out, "overall", overall);
    }
    if options.confusion {
        out.push('\n');
        let _ = write!(out, "{:<14}", "gold \\ pred");
        for c in ISCategory::ALL {
            let _ = write!(out, "{:>8}", c.short_name());
        }
        out.push('\n');
        for g in ISCategory::ALL {
            let _ = write!(out, "{:<14}", g.short_name());
            for p in ISCategory::ALL {
                let _ = write!(out, "{:>8}", report.confusion.get(g, p));
            }
            out.push('\n');
        }
    }
    if options.buckets && !report.length_buckets.is_empty() {
        out.push('\n');
        let _ = writeln!(out, "{:<8}{:<7}{:<7}{:<7}Freq", "length", "R", "P", "F");
        for b in &report.length_buckets {
            let _ = writeln!(
                out,
                "{:<8}{:<7}{:<7}{:<7}{}",
                b.bucket,
                pct(b.prf.recall),
                pct(b.prf.precision),
                pct(b.prf.f1),
                pct(b.freq)
            );
        }
    }
    out
}

/// Category distribution in the layout of a corpus summary table.
pub fn render_stats(name: &str, stats: &StatsReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{name}");
    let _ = writeln!(
        out,
        "documents {}  sentences {}  tokens {}  mentions {}",
        stats.documents, stats.sentences, stats.tokens, stats.mentions
    );
    let share = |n: usize| {
        if stats.mentions == 0 {
            0.0
        } else {
            n as f64 / stats.mentions as f64
        }
    };
    let _ = writeln!(out, "{:<24}{:>8}{:>8}", "category", "count", "%");
    for c in ISCategory::ALL {
        let n = stats.per_category.get(&c).copied().unwrap_or(0);
        let _ = writeln!(out, "{:<24}{n:>8}{:>8}", c.as_str(), pct(share(n)));
    }
    let _ = writeln!(out, "{:<24}{:>8}{:>8}", "mediated (all)", stats.mediated(), pct(share(stats.mediated())));
    if stats.unlabeled > 0 {
        let _ = writeln!(out, "{:<24}{:>8}{:>8}", "unlabeled", stats.unlabeled, pct(share(stats.unlabeled)));
    }
    let _ = writeln!(out, "{:<24}{:>8}", "total", stats.mentions);
    let _ = write!(out, "mention lengths:");
    for b in 0..LENGTH_BUCKETS {
        let _ = write!(out, " {}={}", bucket_label(b), stats.length_histogram[b]);
    }
    out.push('\n');
    out
}
