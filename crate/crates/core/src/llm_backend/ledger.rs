use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::TokenUsage;

/// Prices in currency units per 1,000 tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceTable {
    pub input_per_1k: f64,
    pub output_per_1k: f64,
}

/// Running totals for one process. Every counter only grows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostLedger {
    pub total_input_tokens: u64,
    pub total_output_tokens: u64,
    /// Backend calls, counting every HTTP attempt and every cache hit.
    pub request_count: u64,
    pub cache_hits: u64,
    pub estimated_cost: Option<f64>,
}

/// `input/1000 · price_in + output/1000 · price_out`, or `None` without a
/// price table.
pub fn estimate_cost(ledger: &CostLedger, prices: Option<&PriceTable>) -> Option<f64> {
    prices.map(|p| {
        ledger.total_input_tokens as f64 / 1000.0 * p.input_per_1k
            + ledger.total_output_tokens as f64 / 1000.0 * p.output_per_1k
    })
}

/// Thread-safe ledger shared by a backend stack.
#[derive(Debug, Default)]
pub struct Ledger {
    state: Mutex<CostLedger>,
    prices: Option<PriceTable>,
}

impl Ledger {
    pub fn new(prices: Option<PriceTable>) -> Self {
        let state = CostLedger {
            estimated_cost: estimate_cost(&CostLedger::default(), prices.as_ref()),
            ..CostLedger::default()
        };
        Ledger {
            state: Mutex::new(state),
            prices,
        }
    }

    pub fn prices(&self) -> Option<&PriceTable> {
        self.prices.as_ref()
    }

    /// Records one call to a real backend, with token usage when it
    /// succeeded.
    pub fn record_request(&self, usage: Option<TokenUsage>) {
        let mut state = self.state.lock().expect("ledger lock");
        state.request_count += 1;
        if let Some(u) = usage {
            state.total_input_tokens += u.input_tokens;
            state.total_output_tokens += u.output_tokens;
        }
        state.estimated_cost = estimate_cost(&state, self.prices.as_ref());
    }

    pub fn record_cache_hit(&self) {
        let mut state = self.state.lock().expect("ledger lock");
        state.request_count += 1;
        state.cache_hits += 1;
    }

    pub fn snapshot(&self) -> CostLedger {
        *self.state.lock().expect("ledger lock")
    }
}
