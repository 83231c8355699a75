//! Event ingestion, snapshot windowing and per-snapshot task splits.
//!
//! A stream is built in three pure steps: [`parse_quadruples`] interns names
//! and normalizes time, [`build_snapshots`] cuts the timeline into half-open
//! windows, and [`split_task`] shuffles each window into train/valid/test.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use chrono::{Datelike, Months, NaiveDate};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// One timestamped event `(subject, relation, object, timestamp)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Quadruple {
    pub subject: usize,
    pub relation: usize,
    pub object: usize,
    pub timestamp: i64,
}

impl Quadruple {
    pub fn new(subject: usize, relation: usize, object: usize, timestamp: i64) -> Self {
        Self {
            subject,
            relation,
            object,
            timestamp,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Interner {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Interner {
    fn intern(&mut self, name: &str) -> usize {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len();
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), id);
        id
    }
}

/// Bijective name/id maps for entities and relations, ids contiguous from 0
/// in first-appearance order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    entities: Interner,
    relations: Interner,
}

impl Vocab {
    pub fn num_entities(&self) -> usize {
        self.entities.names.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.names.len()
    }

    pub fn entity_id(&self, name: &str) -> Option<usize> {
        self.entities.index.get(name).copied()
    }

    pub fn relation_id(&self, name: &str) -> Option<usize> {
        self.relations.index.get(name).copied()
    }

    pub fn entity_name(&self, id: usize) -> Option<&str> {
        self.entities.names.get(id).map(String::as_str)
    }

    pub fn relation_name(&self, id: usize) -> Option<&str> {
        self.relations.names.get(id).map(String::as_str)
    }

    pub fn intern_entity(&mut self, name: &str) -> usize {
        self.entities.intern(name)
    }

    pub fn intern_relation(&mut self, name: &str) -> usize {
        self.relations.intern(name)
    }
}

/// How the fourth column of an input line is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeFormat {
    /// ISO `yyyy-mm-dd`, converted to whole days.
    Date,
    /// Integer ticks, divided by `unit` (e.g. 15 for minute-stamped GDELT).
    Tick { unit: i64 },
    /// Decided by the first data line: integer means ticks of unit 1.
    Auto,
}

enum RawTime {
    Day(NaiveDate),
    Tick(i64),
}

/// Events with the absolute time they are measured from.
#[derive(Debug, Clone)]
pub struct ParsedEvents {
    pub vocab: Vocab,
    pub quads: Vec<Quadruple>,
    pub origin: TimeOrigin,
}

/// The earliest timestamp of the input, which maps to relative time 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeOrigin {
    /// Timestamps count days from this date.
    Date(NaiveDate),
    /// Timestamps count ticks (after unit division) from this value.
    Tick(i64),
    /// The input had no events.
    Empty,
}

/// Parses tab-separated `subject, relation, object, time` lines. Lines
/// starting with `#` and blank lines are skipped. Timestamps are returned
/// relative to the earliest one in the input.
pub fn parse_quadruples(text: &str, format: TimeFormat) -> Result<(Vocab, Vec<Quadruple>)> {
    let parsed = parse_events(text, format)?;
    Ok((parsed.vocab, parsed.quads))
}

/// [`parse_quadruples`], also reporting the time origin.
pub fn parse_events(text: &str, format: TimeFormat) -> Result<ParsedEvents> {
    let mut vocab = Vocab::default();
    let mut rows = Vec::new();
    let mut format = format;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 4 tab-separated fields, found {}", fields.len()),
            });
        }
        if let Some(pos) = fields[..3].iter().position(|f| f.trim().is_empty()) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("field {} is empty", pos + 1),
            });
        }
        let time_field = fields[3].trim();
        if format == TimeFormat::Auto {
            format = if time_field.parse::<i64>().is_ok() {
                TimeFormat::Tick { unit: 1 }
            } else {
                TimeFormat::Date
            };
        }
        let time = match format {
            TimeFormat::Date => NaiveDate::parse_from_str(time_field, "%Y-%m-%d")
                .map(RawTime::Day)
                .map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("unparseable date {time_field:?}: {e}"),
                })?,
            TimeFormat::Tick { unit } => {
                if unit <= 0 {
                    return Err(Error::invalid(format!("tick unit must be positive, got {unit}")));
                }
                let tick = time_field.parse::<i64>().map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("unparseable tick {time_field:?}: {e}"),
                })?;
                RawTime::Tick(tick.div_euclid(unit))
            }
            TimeFormat::Auto => unreachable!(),
        };
        let s = vocab.intern_entity(fields[0]);
        let r = vocab.intern_relation(fields[1]);
        let o = vocab.intern_entity(fields[2]);
        rows.push((s, r, o, time));
    }

    let as_int = |t: &RawTime| match t {
        RawTime::Day(d) => d.signed_duration_since(NaiveDate::MIN).num_days(),
        RawTime::Tick(k) => *k,
    };
    let origin = rows.iter().map(|(_, _, _, t)| as_int(t)).min().unwrap_or(0);
    let quads = rows
        .iter()
        .map(|(s, r, o, t)| Quadruple::new(*s, *r, *o, as_int(t) - origin))
        .collect();
    let origin = match rows.first() {
        None => TimeOrigin::Empty,
        Some((_, _, _, RawTime::Day(_))) => TimeOrigin::Date(
            NaiveDate::MIN + chrono::Days::new(origin as u64),
        ),
        Some((_, _, _, RawTime::Tick(_))) => TimeOrigin::Tick(origin),
    };
    Ok(ParsedEvents {
        vocab,
        quads,
        origin,
    })
}

/// All events whose timestamp falls in `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub index: usize,
    pub start: i64,
    pub end: i64,
    pub events: Vec<Quadruple>,
}

/// Cuts the timeline into consecutive windows of `window` time units starting
/// at `origin`. Empty windows between populated ones are kept; trailing empty
/// windows are not produced.
pub fn build_snapshots(quads: &[Quadruple], window: i64, origin: i64) -> Result<Vec<Snapshot>> {
    if window <= 0 {
        return Err(Error::invalid(format!("window must be positive, got {window}")));
    }
    let mut snapshots: Vec<Snapshot> = Vec::new();
    for q in quads {
        if q.timestamp < origin {
            return Err(Error::invalid(format!(
                "event timestamp {} precedes origin {origin}",
                q.timestamp
            )));
        }
        let idx = ((q.timestamp - origin) / window) as usize;
        while snapshots.len() <= idx {
            let t = snapshots.len() as i64;
            snapshots.push(Snapshot {
                index: snapshots.len(),
                start: origin + t * window,
                end: origin + (t + 1) * window,
                events: Vec::new(),
            });
        }
        snapshots[idx].events.push(*q);
    }
    Ok(snapshots)
}

/// Calendar-month windows of `months` months each, starting at the first day
/// of the origin's month. `quads` carry day offsets from `origin`.
pub fn build_month_snapshots(
    quads: &[Quadruple],
    origin: NaiveDate,
    months: u32,
) -> Result<Vec<Snapshot>> {
    if months == 0 {
        return Err(Error::invalid("month window must be positive"));
    }
    let first = origin.with_day(1).expect("day 1 exists in every month");
    let offset_of = |date: NaiveDate| date.signed_duration_since(origin).num_days();
    let month_index = |date: NaiveDate| {
        (date.year() - first.year()) as i64 * 12 + date.month0() as i64 - first.month0() as i64
    };
    let bound = |k: usize| {
        first
            .checked_add_months(Months::new(months * k as u32))
            .map(offset_of)
            .ok_or_else(|| Error::invalid("month window overflows the calendar"))
    };
    let mut snapshots: Vec<Snapshot> = Vec::new();
    for q in quads {
        if q.timestamp < 0 {
            return Err(Error::invalid(format!(
                "event timestamp {} precedes the origin",
                q.timestamp
            )));
        }
        let date = origin + chrono::Days::new(q.timestamp as u64);
        let idx = (month_index(date) / months as i64) as usize;
        while snapshots.len() <= idx {
            let k = snapshots.len();
            snapshots.push(Snapshot {
                index: k,
                start: bound(k)?,
                end: bound(k + 1)?,
                events: Vec::new(),
            });
        }
        snapshots[idx].events.push(*q);
    }
    Ok(snapshots)
}

/// Train/valid/test percentages; must sum to 100.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitRatios {
    pub train: u32,
    pub valid: u32,
    pub test: u32,
}

impl SplitRatios {
    pub fn new(train: u32, valid: u32, test: u32) -> Result<Self> {
        let ratios = Self { train, valid, test };
        ratios.validate()?;
        Ok(ratios)
    }

    pub fn validate(&self) -> Result<()> {
        let sum = self.train + self.valid + self.test;
        if sum != 100 {
            return Err(Error::invalid(format!(
                "split ratios {self} sum to {sum}, expected 100"
            )));
        }
        Ok(())
    }

    /// Largest-remainder apportionment of `n` items; ties in the fractional
    /// part go to the earlier split.
    pub fn sizes(&self, n: usize) -> [usize; 3] {
        let parts = [self.train, self.valid, self.test];
        let mut sizes = [0usize; 3];
        let mut rems = [(0usize, 0usize); 3];
        for (i, &p) in parts.iter().enumerate() {
            let exact = n * p as usize;
            sizes[i] = exact / 100;
            rems[i] = (exact % 100, i);
        }
        let mut left = n - sizes.iter().sum::<usize>();
        rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, i) in rems.iter() {
            if left == 0 {
                break;
            }
            sizes[i] += 1;
            left -= 1;
        }
        sizes
    }
}

impl std::fmt::Display for SplitRatios {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}/{}", self.train, self.valid, self.test)
    }
}

impl std::str::FromStr for SplitRatios {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(['/', ',']).collect();
        if parts.len() != 3 {
            return Err(Error::invalid(format!("expected train/valid/test ratios, got {s:?}")));
        }
        let mut v = [0u32; 3];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad ratio {p:?} in {s:?}")))?;
        }
        SplitRatios::new(v[0], v[1], v[2])
    }
}

/// A snapshot's events split into disjoint train/valid/test lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    pub index: usize,
    pub train: Vec<Quadruple>,
    pub valid: Vec<Quadruple>,
    pub test: Vec<Quadruple>,
}

impl Task {
    pub fn len(&self) -> usize {
        self.train.len() + self.valid.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn split_task(snapshot: &Snapshot, ratios: SplitRatios, seed: u64) -> Result<Task> {
    ratios.validate()?;
    if snapshot.events.is_empty() {
        return Err(Error::invalid(format!(
            "snapshot {} is empty and cannot be split",
            snapshot.index
        )));
    }
    let mut events = snapshot.events.clone();
    let mut rng = rng::rng_for(seed, Stream::Split, &[snapshot.index as u64]);
    events.shuffle(&mut rng);
    let [n_train, n_valid, _] = ratios.sizes(events.len());
    let test = events.split_off(n_train + n_valid);
    let valid = events.split_off(n_train);
    Ok(Task {
        index: snapshot.index,
        train: events,
        valid,
        test,
    })
}

/// The ordered curriculum of tasks over a closed vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskStream {
    pub num_entities: usize,
    pub num_relations: usize,
    pub tasks: Vec<Task>,
    pub ratios: SplitRatios,
    pub seed: u64,
}

const STREAM_MAGIC: &str = "#tkg-stream";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitKind {
    Train,
    Valid,
    Test,
}

impl SplitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitKind::Train => "train",
            SplitKind::Valid => "valid",
            SplitKind::Test => "test",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(SplitKind::Train),
            "valid" => Some(SplitKind::Valid),
            "test" => Some(SplitKind::Test),
            _ => None,
        }
    }
}

/// One `t split s r o tau` record.
pub fn format_event_record(task: usize, split: SplitKind, q: &Quadruple) -> String {
    format!(
        "{} {} {} {} {} {}",
        task,
        split.as_str(),
        q.subject,
        q.relation,
        q.object,
        q.timestamp
    )
}

/// Parses one `t split s r o tau` record.
pub fn parse_event_record(line: &str) -> Option<(usize, SplitKind, Quadruple)> {
    let mut it = line.split_ascii_whitespace();
    let t = it.next()?.parse().ok()?;
    let split = SplitKind::parse(it.next()?)?;
    let s = it.next()?.parse().ok()?;
    let r = it.next()?.parse().ok()?;
    let o = it.next()?.parse().ok()?;
    let tau = it.next()?.parse().ok()?;
    if it.next().is_some() {
        return None;
    }
    Some((t, split, Quadruple::new(s, r, o, tau)))
}

impl TaskStream {
    /// Splits every snapshot into a task. Fails on an empty snapshot.
    pub fn from_snapshots(
        vocab: &Vocab,
        snapshots: &[Snapshot],
        ratios: SplitRatios,
        seed: u64,
    ) -> Result<Self> {
        let tasks = snapshots
            .iter()
            .map(|s| split_task(s, ratios, seed))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            num_entities: vocab.num_entities(),
            num_relations: vocab.num_relations(),
            tasks,
            ratios,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    /// Checks ids against the vocabulary size.
    pub fn validate(&self) -> Result<()> {
        for task in &self.tasks {
            for q in task.train.iter().chain(&task.valid).chain(&task.test) {
                if q.subject >= self.num_entities
                    || q.object >= self.num_entities
                    || q.relation >= self.num_relations
                    || q.timestamp < 0
                {
                    return Err(Error::invalid(format!(
                        "event {q:?} in task {} is outside the vocabulary",
                        task.index
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{STREAM_MAGIC} entities={} relations={} tasks={} ratios={} seed={}",
            self.num_entities,
            self.num_relations,
            self.tasks.len(),
            self.ratios,
            self.seed
        );
        for task in &self.tasks {
            for (kind, list) in [
                (SplitKind::Train, &task.train),
                (SplitKind::Valid, &task.valid),
                (SplitKind::Test, &task.test),
            ] {
                for q in list {
                    out.push_str(&format_event_record(task.index, kind, q));
                    out.push('\n');
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing stream header".into(),
        })?;
        let mut fields = header.split_ascii_whitespace();
        if fields.next() != Some(STREAM_MAGIC) {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header starting with {STREAM_MAGIC}"),
            });
        }
        let mut kv = HashMap::new();
        for f in fields {
            let (k, v) = f.split_once('=').ok_or(Error::Parse {
                line: 1,
                message: format!("bad header field {f:?}"),
            })?;
            kv.insert(k, v);
        }
        let get = |k: &str| {
            kv.get(k).copied().ok_or(Error::Parse {
                line: 1,
                message: format!("header is missing {k}"),
            })
        };
        let num = |k: &str| -> Result<u64> {
            get(k)?.parse().map_err(|_| Error::Parse {
                line: 1,
                message: format!("header field {k} is not an integer"),
            })
        };
        let num_entities = num("entities")? as usize;
        let num_relations = num("relations")? as usize;
        let n_tasks = num("tasks")? as usize;
        let seed = num("seed")?;
        let ratios: SplitRatios = get("ratios")?.parse()?;

        let mut tasks: Vec<Task> = (0..n_tasks)
            .map(|index| Task {
                index,
                train: Vec::new(),
                valid: Vec::new(),
                test: Vec::new(),
            })
            .collect();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (t, kind, q) = parse_event_record(line).ok_or(Error::Parse {
                line: i + 1,
                message: format!("bad event record {line:?}"),
            })?;
            let task = tasks.get_mut(t).ok_or(Error::Parse {
                line: i + 1,
                message: format!("task index {t} out of range (tasks={n_tasks})"),
            })?;
            match kind {
                SplitKind::Train => task.train.push(q),
                SplitKind::Valid => task.valid.push(q),
                SplitKind::Test => task.test.push(q),
            }
        }
        let stream = Self {
            num_entities,
            num_relations,
            tasks,
            ratios,
            seed,
        };
        stream.validate()?;
        Ok(stream)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::codec::write_all(path, self.to_text().as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|e| match e {
            Error::Parse { line, message } => {
                Error::format(path, format!("line {line}: {message}"))
            }
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_and_interns_in_first_appearance_order() {
        let text = "A\tmeets\tB\t2015-01-03\nA\tmeets\tB\t2015-01-04";
        let (vocab, quads) = parse_quadruples(text, TimeFormat::Auto).unwrap();
        assert_eq!(
            quads,
            vec![Quadruple::new(0, 0, 1, 0), Quadruple::new(0, 0, 1, 1)]
        );
        assert_eq!(vocab.entity_name(1), Some("B"));
        assert_eq!(vocab.relation_id("meets"), Some(0));
    }

    #[test]
    fn thirteen_months_make_thirteen_monthly_snapshots() {
        let mut text = String::new();
        for m in 0..13 {
            let (y, mo) = (2014 + (m + 2) / 12, (m + 2) % 12 + 1);
            text.push_str(&format!("A\tr\tB\t{y}-{mo:02}-15\nB\tr\tA\t{y}-{mo:02}-28\n"));
        }
        let parsed = parse_events(&text, TimeFormat::Auto).unwrap();
        let TimeOrigin::Date(origin) = parsed.origin else {
            panic!("expected a date origin");
        };
        assert_eq!(origin, NaiveDate::from_ymd_opt(2014, 3, 15).unwrap());
        let snaps = build_month_snapshots(&parsed.quads, origin, 1).unwrap();
        assert_eq!(snaps.len(), 13);
        assert!(snaps.iter().all(|s| s.events.len() == 2));
        assert_eq!(snaps[0].start, -14);
        assert_eq!(snaps[0].end, 17);
        assert_eq!(build_month_snapshots(&parsed.quads, origin, 3).unwrap().len(), 5);
    }

    #[test]
    fn empty_input_gives_empty_vocab() {
        let (vocab, quads) = parse_quadruples("", TimeFormat::Date).unwrap();
        assert!(quads.is_empty());
        assert_eq!(vocab.num_entities(), 0);
        assert_eq!(vocab.num_relations(), 0);
    }

    #[test]
    fn three_field_line_is_rejected_with_its_line_number() {
        let text = "# comment\nA\tr\tB\t3\nA\tr\tB\n";
        match parse_quadruples(text, TimeFormat::Auto) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_date_is_an_error() {
        let err = parse_quadruples("A\tr\tB\t2015-13-01", TimeFormat::Date).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn ticks_are_normalized_by_unit_and_origin() {
        let text = "a\tr\tb\t30\na\tr\tc\t45\nb\tr\tc\t60";
        let (_, quads) = parse_quadruples(text, TimeFormat::Tick { unit: 15 }).unwrap();
        let ts: Vec<i64> = quads.iter().map(|q| q.timestamp).collect();
        assert_eq!(ts, vec![0, 1, 2]);
    }

    #[test]
    fn windows_are_half_open() {
        let quads: Vec<_> = (0..60).map(|t| Quadruple::new(0, 0, 1, t)).collect();
        let snaps = build_snapshots(&quads, 30, 0).unwrap();
        assert_eq!(snaps.len(), 2);
        assert_eq!((snaps[0].start, snaps[0].end), (0, 30));
        assert_eq!(snaps[0].events.len(), 30);
        assert!(snaps[1].events.iter().any(|q| q.timestamp == 30));
        assert!(snaps[0].events.iter().all(|q| q.timestamp < 30));
    }

    #[test]
    fn one_year_of_days_in_thirty_day_windows_gives_thirteen_snapshots() {
        let quads: Vec<_> = (0..365).map(|t| Quadruple::new(0, 0, 1, t)).collect();
        assert_eq!(build_snapshots(&quads, 30, 0).unwrap().len(), 13);
    }

    #[test]
    fn non_positive_window_is_rejected() {
        assert!(build_snapshots(&[], 0, 0).is_err());
        assert!(build_snapshots(&[], -3, 0).is_err());
    }

    fn snapshot_of(n: usize) -> Snapshot {
        Snapshot {
            index: 0,
            start: 0,
            end: 1,
            events: (0..n).map(|i| Quadruple::new(i, 0, i + 1, 0)).collect(),
        }
    }

    #[test]
    fn split_sizes_follow_ratios() {
        let task = split_task(&snapshot_of(100), SplitRatios::new(50, 25, 25).unwrap(), 1).unwrap();
        assert_eq!((task.train.len(), task.valid.len(), task.test.len()), (50, 25, 25));
        let task = split_task(&snapshot_of(10), SplitRatios::new(60, 20, 20).unwrap(), 1).unwrap();
        assert_eq!((task.train.len(), task.valid.len(), task.test.len()), (6, 2, 2));
    }

    #[test]
    fn largest_remainder_rounding() {
        let r = SplitRatios::new(50, 25, 25).unwrap();
        assert_eq!(r.sizes(7), [3, 2, 2]);
        assert_eq!(r.sizes(1), [1, 0, 0]);
        assert_eq!(SplitRatios::new(34, 33, 33).unwrap().sizes(2), [1, 1, 0]);
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let r = SplitRatios::new(50, 25, 25).unwrap();
        let a = split_task(&snapshot_of(40), r, 9).unwrap();
        let b = split_task(&snapshot_of(40), r, 9).unwrap();
        assert_eq!(a, b);
        let c = split_task(&snapshot_of(40), r, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn split_errors() {
        assert!(SplitRatios::new(50, 25, 20).is_err());
        let r = SplitRatios::new(50, 25, 25).unwrap();
        assert!(split_task(&snapshot_of(0), r, 0).is_err());
    }

    #[test]
    fn stream_text_round_trips() {
        let text = "a\tr\tb\t2015-01-01\nb\tq\tc\t2015-01-02\nc\tr\ta\t2015-01-05\na\tq\tc\t2015-01-06";
        let (vocab, quads) = parse_quadruples(text, TimeFormat::Date).unwrap();
        let snaps = build_snapshots(&quads, 4, 0).unwrap();
        let stream =
            TaskStream::from_snapshots(&vocab, &snaps, SplitRatios::new(50, 25, 25).unwrap(), 3)
                .unwrap();
        let back = TaskStream::from_text(&stream.to_text()).unwrap();
        assert_eq!(stream, back);
    }

    proptest! {
        #[test]
        fn windowing_and_splitting_partition_the_events(
            times in proptest::collection::vec(0i64..200, 0..120),
            window in 1i64..40,
            seed in any::<u64>(),
        ) {
            let quads: Vec<_> = times
                .iter()
                .enumerate()
                .map(|(i, &t)| Quadruple::new(i, 0, i + 1, t))
                .collect();
            let snaps = build_snapshots(&quads, window, 0).unwrap();
            let mut seen: Vec<Quadruple> = snaps.iter().flat_map(|s| s.events.clone()).collect();
            seen.sort();
            let mut expected = quads.clone();
            expected.sort();
            prop_assert_eq!(&seen, &expected);
            for s in &snaps {
                prop_assert!(s.events.iter().all(|q| q.timestamp >= s.start && q.timestamp < s.end));
            }
            if let Some(last) = snaps.last() {
                prop_assert!(!last.events.is_empty());
            }
            let ratios = SplitRatios::new(50, 25, 25).unwrap();
            for s in snaps.iter().filter(|s| !s.events.is_empty()) {
                let task = split_task(s, ratios, seed).unwrap();
                let mut union: Vec<Quadruple> = task
                    .train
                    .iter()
                    .chain(&task.valid)
                    .chain(&task.test)
                    .copied()
                    .collect();
                union.sort();
                let mut events = s.events.clone();
                events.sort();
                prop_assert_eq!(union, events);
            }
        }
    }
}
