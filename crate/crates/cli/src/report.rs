//! Line-delimited JSON reports. Every record carries the run seed and the
//! milliseconds since the run started; timing is reported as 0 unless
//! requested so that reruns are byte-identical.

use std::io::Write;
use std::time::Instant;

use serde_json::{Map, Value};

pub struct Report {
    out: Box<dyn Write>,
    seed: u64,
    timing: bool,
    start: Instant,
}

impl Report {
    pub fn new(out: Box<dyn Write>, seed: u64, timing: bool) -> Self {
        Report {
            out,
            seed,
            timing,
            start: Instant::now(),
        }
    }

    pub fn timing(&self) -> bool {
        self.timing
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Writes one record; `value` must be a JSON object.
    pub fn emit(&mut self, value: Value) -> std::io::Result<()> {
        let mut map = match value {
            Value::Object(map) => map,
            other => {
                let mut m = Map::new();
                m.insert("value".into(), other);
                m
            }
        };
        map.insert("seed".into(), self.seed.into());
        let ms = if self.timing {
            self.start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        map.insert("wall_clock_ms".into(), ms.into());
        serde_json::to_writer(&mut self.out, &Value::Object(map))?;
        self.out.write_all(b"\n")
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}

/// Elapsed milliseconds since `start`, or 0 when timing is off.
pub fn millis(timing: bool, start: Instant) -> f64 {
    if timing {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    }
}
