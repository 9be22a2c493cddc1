//! Trajectory containers and the line-oriented trajectory file format.
//!
//! Format: line 1 holds `N F target_motions`; the next N lines hold 2F reals
//! each (`x1 y1 ... xF yF`, pixels); optionally a line `labels` followed by N
//! lines of ground-truth integer labels in `1..=target_motions`.

use crate::signature::TrajectoryBundle;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

/// N complete pixel trajectories over a common frame count, with optional
/// ground-truth labels. No missing entries are representable.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySet {
    /// `points[k][t]` is the pixel position of trajectory k in frame t.
    pub points: Vec<Vec<[f64; 2]>>,
    pub frames: usize,
    pub labels: Option<Vec<usize>>,
}

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("trajectory set is empty")]
    Empty,
    #[error("trajectory {row} has {got} frames, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("row {row}: expected {expected} values, got {got}")]
    ShapeMismatch {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("label {label} of point {index} outside 1..={target}")]
    LabelRange {
        index: usize,
        label: usize,
        target: usize,
    },
}

impl TrajectorySet {
    pub fn new(points: Vec<Vec<[f64; 2]>>) -> Result<Self, TrajectoryError> {
        let frames = points.first().ok_or(TrajectoryError::Empty)?.len();
        if frames == 0 {
            return Err(TrajectoryError::Empty);
        }
        for (row, p) in points.iter().enumerate() {
            if p.len() != frames {
                return Err(TrajectoryError::RaggedRow {
                    row,
                    expected: frames,
                    got: p.len(),
                });
            }
        }
        Ok(Self {
            points,
            frames,
            labels: None,
        })
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn num_frames(&self) -> usize {
        self.frames
    }

    /// Pixel positions of every trajectory in one frame.
    pub fn frame_positions(&self, frame: usize) -> Vec<[f64; 2]> {
        self.points.iter().map(|p| p[frame]).collect()
    }

    /// Assembles the six chosen trajectories into a frame-major bundle, in the
    /// given order.
    pub fn bundle(&self, members: &[usize; 6]) -> TrajectoryBundle {
        TrajectoryBundle::new(
            (0..self.frames)
                .map(|t| std::array::from_fn(|i| self.points[members[i]][t]))
                .collect(),
        )
    }
}

/// One named sequence: trajectories plus the requested number of motions.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceRecord {
    pub name: String,
    pub traj: TrajectorySet,
    pub target_motions: usize,
}

/// Parses a trajectory file. Blank lines are ignored; errors carry the
/// 1-based line number or data row.
pub fn parse_trajectories(name: &str, text: &str) -> Result<SequenceRecord, TrajectoryError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (line_no, header) = lines.next().ok_or(TrajectoryError::Parse {
        line: 1,
        message: "missing header line".into(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(TrajectoryError::Parse {
            line: line_no,
            message: format!(
                "header needs `N F target_motions`, got {} fields",
                fields.len()
            ),
        });
    }
    let parse_count = |s: &str, what: &str| {
        s.parse::<usize>().map_err(|_| TrajectoryError::Parse {
            line: line_no,
            message: format!("invalid {what} `{s}`"),
        })
    };
    let n = parse_count(fields[0], "point count")?;
    let f = parse_count(fields[1], "frame count")?;
    let target = parse_count(fields[2], "motion count")?;
    if n == 0 || f == 0 || target == 0 {
        return Err(TrajectoryError::Parse {
            line: line_no,
            message: "N, F, and target_motions must all be positive".into(),
        });
    }

    let mut points = Vec::with_capacity(n);
    for row in 0..n {
        let (line_no, line) = lines.next().ok_or(TrajectoryError::Parse {
            line: line_no,
            message: format!("expected {n} trajectory rows, file ended after {row}"),
        })?;
        let mut values = Vec::with_capacity(2 * f);
        for tok in line.split_whitespace() {
            values.push(tok.parse::<f64>().map_err(|_| TrajectoryError::Parse {
                line: line_no,
                message: format!("invalid coordinate `{tok}`"),
            })?);
        }
        if values.len() != 2 * f {
            return Err(TrajectoryError::ShapeMismatch {
                row,
                expected: 2 * f,
                got: values.len(),
            });
        }
        points.push((0..f).map(|t| [values[2 * t], values[2 * t + 1]]).collect());
    }
    let mut traj = TrajectorySet::new(points)?;

    if let Some((line_no, marker)) = lines.next() {
        if marker != "labels" {
            return Err(TrajectoryError::Parse {
                line: line_no,
                message: format!("expected `labels` or end of file, got `{marker}`"),
            });
        }
        let mut labels = Vec::with_capacity(n);
        for index in 0..n {
            let (line_no, line) = lines.next().ok_or(TrajectoryError::Parse {
                line: line_no,
                message: format!("expected {n} labels, file ended after {index}"),
            })?;
            let label = line.parse::<usize>().map_err(|_| TrajectoryError::Parse {
                line: line_no,
                message: format!("invalid label `{line}`"),
            })?;
            if label < 1 || label > target {
                return Err(TrajectoryError::LabelRange {
                    index,
                    label,
                    target,
                });
            }
            labels.push(label);
        }
        traj.labels = Some(labels);
    }
    if let Some((line_no, extra)) = lines.next() {
        return Err(TrajectoryError::Parse {
            line: line_no,
            message: format!("unexpected trailing content `{extra}`"),
        });
    }
    Ok(SequenceRecord {
        name: name.to_string(),
        traj,
        target_motions: target,
    })
}

/// Loads a sequence; the record is named after the file stem.
pub fn load_trajectories(path: &Path) -> Result<SequenceRecord, TrajectoryError> {
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_trajectories(&name, &text)
}

/// Renders a sequence in the trajectory file format. Coordinates use the
/// shortest decimal form that round-trips, so write-then-read is lossless.
pub fn format_trajectories(record: &SequenceRecord) -> String {
    let traj = &record.traj;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {}",
        traj.num_points(),
        traj.num_frames(),
        record.target_motions
    );
    for p in &traj.points {
        let mut first = true;
        for xy in p {
            if !first {
                out.push(' ');
            }
            let _ = write!(out, "{} {}", xy[0], xy[1]);
            first = false;
        }
        out.push('\n');
    }
    if let Some(labels) = &traj.labels {
        out.push_str("labels\n");
        for l in labels {
            let _ = writeln!(out, "{l}");
        }
    }
    out
}

/// Writes a sequence file (see [`format_trajectories`]).
pub fn save_trajectories(path: &Path, record: &SequenceRecord) -> Result<(), TrajectoryError> {
    std::fs::write(path, format_trajectories(record))?;
    Ok(())
}
