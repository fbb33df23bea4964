//! Operation trace emitted by the mapper and replayed by the cost model.
//!
//! Steps carry the pipeline labels of the accelerator data flow. They are
//! stored in execution order: quantization (1b) runs before
//! signal-to-event conversion (1a) because quantization comes first in
//! this pipeline. Byte volumes chain from one step to the next:
//! `bytes_in` of a step equals `bytes_out` of its predecessor.

use std::fmt::Write as _;
use std::ops::AddAssign;

use crate::{Error, Result};

/// Element sizes used for byte accounting.
pub const RAW_SAMPLE_BYTES: u64 = 2;
pub const CODE_BYTES: u64 = 2;
pub const EVENT_BYTES: u64 = 2;
pub const SEED_BYTES: u64 = 8;
pub const ANCHOR_BYTES: u64 = 8;
pub const RESULT_BYTES: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Step {
    Quantize,
    SignalToEvent,
    HashGen,
    FreqFilter,
    Query,
    Vote,
    Bucketize,
    Sort,
    Chain,
}

impl Step {
    /// Execution order.
    pub const ALL: [Step; 9] = [
        Step::Quantize,
        Step::SignalToEvent,
        Step::HashGen,
        Step::FreqFilter,
        Step::Query,
        Step::Vote,
        Step::Bucketize,
        Step::Sort,
        Step::Chain,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Step::SignalToEvent => "1a",
            Step::Quantize => "1b",
            Step::HashGen => "2c",
            Step::FreqFilter => "2d",
            Step::Query => "2e",
            Step::Vote => "2f",
            Step::Bucketize => "3g",
            Step::Sort => "3h",
            Step::Chain => "3i",
        }
    }

    pub fn from_label(s: &str) -> Option<Step> {
        Step::ALL.into_iter().find(|st| st.label() == s)
    }

    pub fn index(self) -> usize {
        Step::ALL.iter().position(|&s| s == self).unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpClass {
    Add,
    Compare,
    Multiply,
    Divide,
    /// Hash-table probe, served by the querying units.
    Lookup,
    /// One comparator column of the sorting network.
    SortStage,
    /// Individual compare-exchange inside the network (energy only).
    Comparator,
    /// One element emitted by the streaming merger.
    MergeStep,
}

impl OpClass {
    pub const ALL: [OpClass; 8] = [
        OpClass::Add,
        OpClass::Compare,
        OpClass::Multiply,
        OpClass::Divide,
        OpClass::Lookup,
        OpClass::SortStage,
        OpClass::Comparator,
        OpClass::MergeStep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpClass::Add => "add",
            OpClass::Compare => "compare",
            OpClass::Multiply => "multiply",
            OpClass::Divide => "divide",
            OpClass::Lookup => "lookup",
            OpClass::SortStage => "sort_stage",
            OpClass::Comparator => "comparator",
            OpClass::MergeStep => "merge_step",
        }
    }

    pub fn from_name(s: &str) -> Option<OpClass> {
        OpClass::ALL.into_iter().find(|c| c.name() == s)
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(
            self,
            OpClass::Add | OpClass::Compare | OpClass::Multiply | OpClass::Divide
        )
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepTrace {
    ops: [u64; 8],
    pub bytes_in: u64,
    pub bytes_out: u64,
    /// Independent work items available to spread over parallel units.
    pub work_items: u64,
}

impl StepTrace {
    pub fn ops(&self, class: OpClass) -> u64 {
        self.ops[class.index()]
    }

    pub fn add_ops(&mut self, class: OpClass, n: u64) {
        self.ops[class.index()] += n;
    }

    pub fn set_ops(&mut self, class: OpClass, n: u64) {
        self.ops[class.index()] = n;
    }

    pub fn total_ops(&self) -> u64 {
        self.ops.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        *self == StepTrace::default()
    }
}

impl AddAssign for StepTrace {
    fn add_assign(&mut self, o: Self) {
        for (a, b) in self.ops.iter_mut().zip(o.ops) {
            *a += b;
        }
        self.bytes_in += o.bytes_in;
        self.bytes_out += o.bytes_out;
        self.work_items += o.work_items;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OperationTrace {
    steps: [StepTrace; 9],
    pub reads: u64,
    /// Raw signal bytes read from flash.
    pub raw_bytes: u64,
    /// Serialized index size.
    pub index_bytes: u64,
    /// Mapping results written back.
    pub result_bytes: u64,
}

impl OperationTrace {
    pub fn step(&self, s: Step) -> &StepTrace {
        &self.steps[s.index()]
    }

    pub fn step_mut(&mut self, s: Step) -> &mut StepTrace {
        &mut self.steps[s.index()]
    }

    pub fn steps(&self) -> impl Iterator<Item = (Step, &StepTrace)> {
        Step::ALL.into_iter().map(move |s| (s, self.step(s)))
    }

    /// Sum of per-read traces. The index is shared, so its size is taken
    /// once rather than summed.
    pub fn merge(&mut self, other: &OperationTrace) {
        for (a, b) in self.steps.iter_mut().zip(&other.steps) {
            *a += *b;
        }
        self.reads += other.reads;
        self.raw_bytes += other.raw_bytes;
        self.result_bytes += other.result_bytes;
        self.index_bytes = self.index_bytes.max(other.index_bytes);
    }

    /// First step whose input volume differs from its predecessor's output.
    pub fn conservation_violation(&self) -> Option<Step> {
        if self.step(Step::Quantize).bytes_in != self.raw_bytes {
            return Some(Step::Quantize);
        }
        Step::ALL
            .windows(2)
            .find(|w| self.step(w[0]).bytes_out != self.step(w[1]).bytes_in)
            .map(|w| w[1])
    }

    pub fn is_zero(&self) -> bool {
        *self == OperationTrace::default()
    }

    /// Every op count multiplied by `k`.
    pub fn scale_ops(&self, k: u64) -> OperationTrace {
        let mut t = self.clone();
        for s in t.steps.iter_mut() {
            for o in s.ops.iter_mut() {
                *o *= k;
            }
        }
        t
    }

    /// Tab-separated `step op_class count bytes`. Global quantities use
    /// step `*`; byte volumes use the pseudo classes `io_in`/`io_out` and
    /// work items the class `work`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("step\top_class\tcount\tbytes\n");
        for (name, count, bytes) in [
            ("reads", self.reads, 0),
            ("raw_input", 0, self.raw_bytes),
            ("index", 0, self.index_bytes),
            ("result", 0, self.result_bytes),
        ] {
            writeln!(out, "*\t{name}\t{count}\t{bytes}").unwrap();
        }
        for (step, t) in self.steps() {
            let l = step.label();
            for class in OpClass::ALL {
                writeln!(out, "{l}\t{}\t{}\t0", class.name(), t.ops(class)).unwrap();
            }
            writeln!(out, "{l}\tio_in\t0\t{}", t.bytes_in).unwrap();
            writeln!(out, "{l}\tio_out\t0\t{}", t.bytes_out).unwrap();
            writeln!(out, "{l}\twork\t{}\t0", t.work_items).unwrap();
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<OperationTrace> {
        let mut t = OperationTrace::default();
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "step\top_class\tcount\tbytes" => {}
            _ => return Err(Error::parse(1, "missing trace header")),
        }
        for (i, line) in lines {
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let [step, class, count, bytes] = f.as_slice() else {
                return Err(Error::parse(lineno, "expected 4 columns"));
            };
            let num = |s: &str| {
                s.parse::<u64>()
                    .map_err(|_| Error::parse(lineno, format!("bad number {s:?}")))
            };
            let (count, bytes) = (num(count)?, num(bytes)?);
            if *step == "*" {
                match *class {
                    "reads" => t.reads = count,
                    "raw_input" => t.raw_bytes = bytes,
                    "index" => t.index_bytes = bytes,
                    "result" => t.result_bytes = bytes,
                    c => return Err(Error::parse(lineno, format!("unknown global {c:?}"))),
                }
                continue;
            }
            let st = Step::from_label(step)
                .ok_or_else(|| Error::parse(lineno, format!("unknown step {step:?}")))?;
            let s = t.step_mut(st);
            match *class {
                "io_in" => s.bytes_in = bytes,
                "io_out" => s.bytes_out = bytes,
                "work" => s.work_items = count,
                c => {
                    let class = OpClass::from_name(c)
                        .ok_or_else(|| Error::parse(lineno, format!("unknown op class {c:?}")))?;
                    s.set_ops(class, count);
                }
            }
        }
        Ok(t)
    }
}
