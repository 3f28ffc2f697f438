use crate::error::{MetricsError, Result};

/// One communication round as seen by the server.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    /// 1-based round number.
    pub round: usize,
    pub top1: f64,
    /// Sampled client ids in slot order.
    pub clients: Vec<usize>,
    pub losses_before: Vec<f64>,
    pub losses_after: Vec<f64>,
    pub impacts: Vec<f64>,
    /// Wall-clock seconds spent computing impact factors.
    pub impact_secs: f64,
    /// Wall-clock seconds spent in the weighted sum.
    pub aggregation_secs: f64,
}

impl RoundRecord {
    /// Population mean and variance of `losses_before`.
    pub fn loss_mean_var(&self) -> (f64, f64) {
        mean_var(&self.losses_before)
    }
}

/// Population mean and variance; `(0, 0)` for an empty slice.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Per-round records with strictly increasing round numbers.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunLog {
    records: Vec<RoundRecord>,
}

const ROUNDS_HEADER: [&str; 8] = [
    "round",
    "top1",
    "loss_mean",
    "loss_var",
    "clients",
    "losses_before",
    "losses_after",
    "impacts",
];
const TIMING_HEADER: [&str; 3] = ["round", "impact_secs", "aggregation_secs"];

impl RunLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: Vec<RoundRecord>) -> Result<Self> {
        let mut log = Self::new();
        for r in records {
            log.push(r)?;
        }
        Ok(log)
    }

    pub fn push(&mut self, record: RoundRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.round <= last.round {
                return Err(MetricsError::Log(format!(
                    "round {} after round {}",
                    record.round, last.round
                )));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[RoundRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn top1_series(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.top1).collect()
    }

    pub fn rounds(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.round).collect()
    }

    /// Deterministic per-round CSV. Vector columns are `;`-separated.
    /// Wall-clock timings go to [`RunLog::timing_csv`] so that repeated runs
    /// produce byte-identical files here.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(ROUNDS_HEADER).expect("in-memory write");
        for r in &self.records {
            let (mean, var) = r.loss_mean_var();
            w.write_record([
                r.round.to_string(),
                r.top1.to_string(),
                mean.to_string(),
                var.to_string(),
                join(&r.clients),
                join(&r.losses_before),
                join(&r.losses_after),
                join(&r.impacts),
            ])
            .expect("in-memory write");
        }
        into_string(w)
    }

    pub fn timing_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(TIMING_HEADER).expect("in-memory write");
        for r in &self.records {
            w.write_record([
                r.round.to_string(),
                r.impact_secs.to_string(),
                r.aggregation_secs.to_string(),
            ])
            .expect("in-memory write");
        }
        into_string(w)
    }

    /// Inverse of [`RunLog::to_csv`] plus, optionally, [`RunLog::timing_csv`].
    /// Without timings both timing fields are zero.
    pub fn from_csv(rounds: &str, timing: Option<&str>) -> Result<Self> {
        let mut rdr = reader(rounds);
        check_header(&mut rdr, &ROUNDS_HEADER)?;
        let mut log = Self::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| MetricsError::Csv(e.to_string()))?;
            if rec.len() != ROUNDS_HEADER.len() {
                return Err(MetricsError::Csv(format!("expected 8 fields, got {}", rec.len())));
            }
            log.push(RoundRecord {
                round: field(&rec[0], "round")?,
                top1: field(&rec[1], "top1")?,
                clients: split(&rec[4], "clients")?,
                losses_before: split(&rec[5], "losses_before")?,
                losses_after: split(&rec[6], "losses_after")?,
                impacts: split(&rec[7], "impacts")?,
                impact_secs: 0.0,
                aggregation_secs: 0.0,
            })?;
        }
        if let Some(t) = timing {
            let mut rdr = reader(t);
            check_header(&mut rdr, &TIMING_HEADER)?;
            let mut n = 0;
            for rec in rdr.records() {
                let rec = rec.map_err(|e| MetricsError::Csv(e.to_string()))?;
                let r = log
                    .records
                    .get_mut(n)
                    .ok_or_else(|| MetricsError::Csv("more timing rows than rounds".into()))?;
                if rec.len() != 3 || field::<usize>(&rec[0], "round")? != r.round {
                    return Err(MetricsError::Csv(format!("timing row {n} does not match")));
                }
                r.impact_secs = field(&rec[1], "impact_secs")?;
                r.aggregation_secs = field(&rec[2], "aggregation_secs")?;
                n += 1;
            }
            if n != log.len() {
                return Err(MetricsError::Csv("fewer timing rows than rounds".into()));
            }
        }
        Ok(log)
    }
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes())
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<()> {
    let mut rec = csv::StringRecord::new();
    let ok = rdr
        .read_record(&mut rec)
        .map_err(|e| MetricsError::Csv(e.to_string()))?;
    if !ok || rec.iter().ne(expected.iter().copied()) {
        return Err(MetricsError::Csv(format!("expected header {}", expected.join(","))));
    }
    Ok(())
}

fn into_string(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(";")
}

fn field<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| MetricsError::Csv(format!("bad {what}: {s:?}")))
}

fn split<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';').map(|x| field(x, what)).collect()
}
