//! Line-oriented text formats.
//!
//! Instance file. `#` starts a comment anywhere on a line; blank lines are ignored.
//!
//! ```text
//! buyers <n>
//! <B_1>
//! ...
//! <B_n>
//! items <m>
//! price <b_j>; buyers <i> <i> ...      # bounded allocation item
//! bids <i>:<b_ij> <i>:<b_ij> ...       # ad-auction item
//! ```
//!
//! All item lines of one file must be of the same kind; a file with no items
//! is a bounded-allocation instance.
//!
//! Prediction file: one buyer index per line (`0` = do not sell), items in
//! arrival order. Leading `# key: value` comment lines carry metadata.
//!
//! Allocation file: `<item> <buyer> <fraction>` per line with items numbered
//! from 1.
//!
//! Trace file: tab-separated, header
//! `item  stage  buyer  fraction  primal_delta  dual_delta`, one row per record.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};
use crate::market::{
    AuctionInstance, BoundedInstance, BoundedItem, BuyerId, FractionalAllocation, Instance, Market, Prediction,
};

fn strip(line: &str) -> &str {
    match line.find('#') {
        Some(k) => line[..k].trim(),
        None => line.trim(),
    }
}

/// Non-empty, comment-stripped lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, strip(l)))
        .filter(|(_, l)| !l.is_empty())
}

fn number<T: std::str::FromStr>(line: usize, tok: &str, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse(line, format!("expected {what}, found `{tok}`")))
}

fn header(line: usize, text: &str, key: &str) -> Result<usize> {
    let mut it = text.split_whitespace();
    match (it.next(), it.next(), it.next()) {
        (Some(k), Some(v), None) if k == key => number(line, v, "a count"),
        _ => Err(Error::parse(line, format!("expected `{key} <count>`"))),
    }
}

enum ItemLine {
    Bounded(BoundedItem),
    Auction(Vec<(BuyerId, f64)>),
}

fn parse_item(line: usize, text: &str) -> Result<ItemLine> {
    if let Some(rest) = text.strip_prefix("price") {
        let (price, buyers) = rest
            .split_once(';')
            .ok_or_else(|| Error::parse(line, "expected `price <b>; buyers <i> ...`"))?;
        let price: f64 = number(line, price.trim(), "a price")?;
        let mut toks = buyers.split_whitespace();
        if toks.next() != Some("buyers") {
            return Err(Error::parse(line, "expected `buyers` after `;`"));
        }
        let interested = toks
            .map(|t| number(line, t, "a buyer index"))
            .collect::<Result<Vec<BuyerId>>>()?;
        Ok(ItemLine::Bounded(BoundedItem { price, interested }))
    } else if let Some(rest) = text.strip_prefix("bids") {
        let bids = rest
            .split_whitespace()
            .map(|t| {
                let (i, b) = t
                    .split_once(':')
                    .ok_or_else(|| Error::parse(line, format!("expected `buyer:bid`, found `{t}`")))?;
                Ok((number(line, i, "a buyer index")?, number(line, b, "a bid")?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ItemLine::Auction(bids))
    } else {
        Err(Error::parse(
            line,
            "expected an item line starting with `price` or `bids`",
        ))
    }
}

/// Parses an instance file.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut lines = content_lines(text);
    let (l0, h) = lines.next().ok_or_else(|| Error::parse(1, "empty instance file"))?;
    let n = header(l0, h, "buyers")?;
    let mut budgets = Vec::with_capacity(n);
    for k in 0..n {
        let (l, t) = lines
            .next()
            .ok_or_else(|| Error::parse(l0, format!("expected {n} budgets, found {k}")))?;
        budgets.push(number::<f64>(l, t, "a budget")?);
    }
    let (lm, h) = lines
        .next()
        .ok_or_else(|| Error::parse(l0, "missing `items <count>` header"))?;
    let m = header(lm, h, "items")?;
    let mut bounded = Vec::new();
    let mut auction = Vec::new();
    for k in 0..m {
        let (l, t) = lines
            .next()
            .ok_or_else(|| Error::parse(lm, format!("expected {m} items, found {k}")))?;
        match parse_item(l, t)? {
            ItemLine::Bounded(it) if auction.is_empty() => bounded.push(it),
            ItemLine::Auction(b) if bounded.is_empty() => auction.push(b),
            _ => return Err(Error::parse(l, "bounded and auction items cannot be mixed")),
        }
    }
    if let Some((l, _)) = lines.next() {
        return Err(Error::parse(l, "unexpected content after the last item"));
    }
    if auction.is_empty() {
        Ok(Instance::Bounded(BoundedInstance::new(budgets, bounded)?))
    } else {
        Ok(Instance::Auction(AuctionInstance::new(budgets, auction)?))
    }
}

/// Formats an instance; `parse_instance` reads it back unchanged.
pub fn format_instance(instance: &Instance) -> String {
    let market = instance.as_market();
    let mut s = String::new();
    let _ = writeln!(s, "buyers {}", market.num_buyers());
    for b in market.budgets() {
        let _ = writeln!(s, "{b}");
    }
    let _ = writeln!(s, "items {}", market.num_items());
    match instance {
        Instance::Bounded(inst) => {
            for it in inst.items() {
                let _ = write!(s, "price {}; buyers", it.price);
                for i in &it.interested {
                    let _ = write!(s, " {i}");
                }
                s.push('\n');
            }
        }
        Instance::Auction(inst) => {
            for j in 0..inst.num_items() {
                s.push_str("bids");
                for (i, b) in inst.item_bids(j) {
                    let _ = write!(s, " {i}:{b}");
                }
                s.push('\n');
            }
        }
    }
    s
}

/// A prediction together with its `# key: value` header lines.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PredictionFile {
    pub prediction: Prediction,
    pub metadata: Vec<(String, String)>,
}

pub fn parse_prediction(text: &str) -> Result<PredictionFile> {
    let mut metadata = Vec::new();
    let mut values = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let t = raw.trim();
        if let Some(c) = t.strip_prefix('#') {
            if values.is_empty() {
                if let Some((key, v)) = c.split_once(':') {
                    metadata.push((key.trim().to_string(), v.trim().to_string()));
                }
            }
            continue;
        }
        let t = strip(t);
        if t.is_empty() {
            continue;
        }
        values.push(number::<BuyerId>(k + 1, t, "a buyer index")?);
    }
    Ok(PredictionFile {
        prediction: Prediction(values),
        metadata,
    })
}

pub fn format_prediction(prediction: &Prediction, metadata: &[(String, String)]) -> String {
    let mut s = String::new();
    for (k, v) in metadata {
        let _ = writeln!(s, "# {k}: {v}");
    }
    for i in prediction.as_slice() {
        let _ = writeln!(s, "{i}");
    }
    s
}

/// Parses an allocation file for an instance of the given shape.
pub fn parse_allocation(text: &str, num_buyers: usize, num_items: usize) -> Result<FractionalAllocation> {
    let mut alloc = FractionalAllocation::new(num_buyers, num_items);
    for (l, t) in content_lines(text) {
        let toks: Vec<&str> = t.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::parse(l, "expected `<item> <buyer> <fraction>`"));
        }
        let j: usize = number(l, toks[0], "an item index")?;
        let i: BuyerId = number(l, toks[1], "a buyer index")?;
        let x: f64 = number(l, toks[2], "a fraction")?;
        if j == 0 || j > num_items {
            return Err(Error::parse(l, format!("item {j} outside 1..={num_items}")));
        }
        if i > num_buyers {
            return Err(Error::parse(l, format!("buyer {i} outside 0..={num_buyers}")));
        }
        if !(x.is_finite() && x >= 0.0) {
            return Err(Error::parse(l, format!("invalid fraction {x}")));
        }
        alloc.add(j - 1, i, x);
    }
    Ok(alloc)
}

pub fn format_allocation(alloc: &FractionalAllocation) -> String {
    let mut s = String::new();
    for (j, i, x) in alloc.iter() {
        let _ = writeln!(s, "{} {i} {x}", j + 1);
    }
    s
}

/// One row of an exported run trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// Item number, starting at 1.
    pub item: usize,
    /// `stage1`/`stage2`/`stage3` for bounded allocation,
    /// `argmax`/`prediction`/`fictitious` for ad-auctions.
    pub stage: String,
    pub buyer: BuyerId,
    pub fraction: f64,
    pub primal: f64,
    pub dual: f64,
}

pub const TRACE_HEADER: &str = "item\tstage\tbuyer\tfraction\tprimal_delta\tdual_delta";

pub fn write_trace(records: &[TraceRecord], mut out: impl Write) -> Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.item, r.stage, r.buyer, r.fraction, r.primal, r.dual
        )?;
    }
    Ok(())
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let l = k + 1;
        if line.trim().is_empty() || (k == 0 && line.trim() == TRACE_HEADER) {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 6 {
            return Err(Error::parse(l, "expected 6 tab-separated fields"));
        }
        out.push(TraceRecord {
            item: number(l, f[0], "an item index")?,
            stage: f[1].to_string(),
            buyer: number(l, f[2], "a buyer index")?,
            fraction: number(l, f[3], "a fraction")?,
            primal: number(l, f[4], "a primal increment")?,
            dual: number(l, f[5], "a dual increment")?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BOUNDED: &str = "\
# two buyers
buyers 2
100
50.5
items 2
price 10; buyers 1 2
price 2.25; buyers 2   # trailing comment
";

    #[test]
    fn bounded_round_trip() {
        let inst = parse_instance(BOUNDED).unwrap();
        let Instance::Bounded(b) = &inst else { panic!() };
        assert_eq!(b.items()[1].interested, vec![2]);
        assert_eq!(b.budgets(), &[100.0, 50.5]);
        let again = parse_instance(&format_instance(&inst)).unwrap();
        assert_eq!(inst, again);
    }

    #[test]
    fn auction_round_trip() {
        let text = "buyers 2\n1\n2\nitems 2\nbids 1:0.5 2:1.25\nbids\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.kind(), "auction");
        assert_eq!(parse_instance(&format_instance(&inst)).unwrap(), inst);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = "buyers 1\n10\nitems 1\nprice x; buyers 1\n";
        match parse_instance(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        let mixed = "buyers 1\n10\nitems 2\nprice 1; buyers 1\nbids 1:2\n";
        assert!(matches!(parse_instance(mixed), Err(Error::Parse { line: 5, .. })));
        assert!(matches!(parse_instance("buyers 2\n1\n"), Err(Error::Parse { .. })));
        assert!(matches!(
            parse_instance("buyers 1\n1\nitems 1\nprice 1; buyers 3\n"),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn prediction_with_metadata() {
        let p = Prediction(vec![1, 0, 3]);
        let meta = vec![("seed".to_string(), "7".to_string())];
        let text = format_prediction(&p, &meta);
        let back = parse_prediction(&text).unwrap();
        assert_eq!(back.prediction, p);
        assert_eq!(back.metadata, meta);
        assert!(matches!(parse_prediction("1\n-2\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn allocation_round_trip() {
        let mut a = FractionalAllocation::new(2, 3);
        a.add(0, 1, 0.5);
        a.add(2, 2, 0.25);
        let back = parse_allocation(&format_allocation(&a), 2, 3).unwrap();
        assert_eq!(back, a);
        assert!(parse_allocation("4 1 0.5\n", 2, 3).is_err());
    }

    #[test]
    fn trace_round_trip() {
        let recs = vec![TraceRecord {
            item: 1,
            stage: "stage1".into(),
            buyer: 2,
            fraction: 0.5,
            primal: 50.0,
            dual: 66.5,
        }];
        let mut buf = Vec::new();
        write_trace(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(TRACE_HEADER));
        assert_eq!(parse_trace(&text).unwrap(), recs);
    }
}
