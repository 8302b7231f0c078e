use std::io::Write;

pub const HISTORY_HEADER: &str = "epoch,train_loss,val_loss,val_acc,seconds";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn push(&mut self, record: EpochRecord) {
        self.epochs.push(record);
    }

    pub fn val_losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.val_loss).collect()
    }

    /// Epoch (1-based) with the lowest validation loss; the earliest wins ties.
    pub fn best_epoch(&self) -> Option<usize> {
        self.epochs
            .iter()
            .fold(None::<&EpochRecord>, |best, e| match best {
                Some(b) if b.val_loss <= e.val_loss => Some(b),
                _ => Some(e),
            })
            .map(|e| e.epoch)
    }

    /// CSV with [`HISTORY_HEADER`]. `with_seconds = false` writes 0 in the
    /// time column so that reruns produce identical bytes.
    pub fn write_csv(&self, mut out: impl Write, with_seconds: bool) -> std::io::Result<()> {
        writeln!(out, "{HISTORY_HEADER}")?;
        for e in &self.epochs {
            let secs = if with_seconds { e.seconds } else { 0.0 };
            writeln!(out, "{},{},{},{},{}", e.epoch, e.train_loss, e.val_loss, e.val_acc, secs)?;
        }
        Ok(())
    }
}

/// True iff the last two validation losses each strictly rose.
pub fn early_stop(history: &TrainHistory) -> bool {
    stop_on_rises(&history.val_losses())
}

pub fn stop_on_rises(val_losses: &[f64]) -> bool {
    match val_losses {
        [.., a, b, c] => b > a && c > b,
        _ => false,
    }
}
