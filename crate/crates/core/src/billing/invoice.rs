//! Invoicing: pricing models applied to aggregated counters with exact
//! integer arithmetic, rounded once (toward zero) at the line level.

use super::events::UsageMetric;
use super::tracker::AggregatedCounter;
use crate::asset::{AssetId, PricingModel, UsageMeter};
use crate::money::Money;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BillingError {
    #[error("no pricing entry for asset `{0}`")]
    MissingPricing(AssetId),
    #[error("invoice amount overflow for asset `{0}`")]
    AmountOverflow(AssetId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvoiceLine {
    pub asset: AssetId,
    pub metric: String,
    pub quantity: String,
    pub rate: String,
    pub amount: Money,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Invoice {
    pub period_start: u64,
    pub period_end: u64,
    pub lines: Vec<InvoiceLine>,
    pub total: Money,
}

impl Invoice {
    /// Plain-text table rendering.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "invoice period [{}, {})", self.period_start, self.period_end);
        let mut rows: Vec<[String; 4]> = vec![[
            "asset".to_string(),
            "quantity".to_string(),
            "rate".to_string(),
            "amount".to_string(),
        ]];
        for l in &self.lines {
            rows.push([
                l.asset.to_string(),
                l.quantity.clone(),
                l.rate.clone(),
                l.amount.to_string(),
            ]);
        }
        let widths: Vec<usize> = (0..4)
            .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        for r in &rows {
            let _ = writeln!(
                out,
                "{:<w0$}  {:>w1$}  {:<w2$}  {:>w3$}",
                r[0],
                r[1],
                r[2],
                r[3],
                w0 = widths[0],
                w1 = widths[1],
                w2 = widths[2],
                w3 = widths[3]
            );
        }
        let _ = writeln!(out, "total {}", self.total);
        out
    }
}

fn decimal(quantity: u64, per: u64) -> String {
    let whole = quantity / per;
    let frac = quantity % per;
    if frac == 0 {
        return whole.to_string();
    }
    let digits = per.ilog10() as usize;
    let mut s = format!("{whole}.{frac:0digits$}");
    while s.ends_with('0') {
        s.pop();
    }
    s
}

/// Builds an invoice for the counters whose window starts inside the period.
/// Pay-per-use lines come from matching usage; pay-once and subscription
/// lines are period lines, independent of the counters. Every asset that
/// appears in a counter must have a pricing entry.
pub fn make_invoice(
    counters: &[AggregatedCounter],
    pricing: &BTreeMap<AssetId, PricingModel>,
    period: (u64, u64),
) -> Result<Invoice, BillingError> {
    let (start, end) = period;
    let mut usage: BTreeMap<(AssetId, UsageMetric), u64> = BTreeMap::new();
    for c in counters {
        if c.window_start < start || c.window_start >= end {
            continue;
        }
        if !pricing.contains_key(&c.asset) {
            return Err(BillingError::MissingPricing(c.asset.clone()));
        }
        let slot = usage.entry((c.asset.clone(), c.metric)).or_insert(0);
        *slot = slot
            .checked_add(c.total)
            .ok_or_else(|| BillingError::AmountOverflow(c.asset.clone()))?;
    }

    let mut lines = Vec::new();
    for (asset, model) in pricing {
        match model {
            PricingModel::PayOnce { price } => {
                lines.push(InvoiceLine {
                    asset: asset.clone(),
                    metric: "flat".to_string(),
                    quantity: "1".to_string(),
                    rate: model.to_string(),
                    amount: *price,
                });
            }
            PricingModel::Subscription { price, period_s } => {
                let span = end.saturating_sub(start);
                let periods = span.div_ceil(*period_s).max(1);
                let amount = price
                    .checked_mul(periods as i64)
                    .ok_or_else(|| BillingError::AmountOverflow(asset.clone()))?;
                lines.push(InvoiceLine {
                    asset: asset.clone(),
                    metric: "subscription".to_string(),
                    quantity: format!("{periods} period{}", if periods == 1 { "" } else { "s" }),
                    rate: model.to_string(),
                    amount,
                });
            }
            PricingModel::PayPerUse { rate, metric } => {
                // Calls and rows both count as calls: tracking fires per
                // processed tuple.
                let quantity: u64 = match metric {
                    UsageMeter::PerCall | UsageMeter::PerThousandCalls => {
                        let calls = usage.get(&(asset.clone(), UsageMetric::Calls)).copied();
                        let rows = usage.get(&(asset.clone(), UsageMetric::Rows)).copied();
                        match calls.unwrap_or(0).checked_add(rows.unwrap_or(0)) {
                            Some(v) => v,
                            None => return Err(BillingError::AmountOverflow(asset.clone())),
                        }
                    }
                    UsageMeter::PerMegabyte => {
                        usage.get(&(asset.clone(), UsageMetric::Bytes)).copied().unwrap_or(0)
                    }
                    UsageMeter::PerHour => {
                        usage.get(&(asset.clone(), UsageMetric::Seconds)).copied().unwrap_or(0)
                    }
                };
                if quantity == 0 {
                    continue;
                }
                let (num, den, qty_str, metric_name) = match metric {
                    UsageMeter::PerCall => (quantity, 1, format!("{quantity} calls"), "calls"),
                    UsageMeter::PerThousandCalls => {
                        (quantity, 1000, format!("{quantity} calls"), "calls")
                    }
                    UsageMeter::PerMegabyte => {
                        (quantity, 1_000_000, format!("{} MB", decimal(quantity, 1_000_000)), "bytes")
                    }
                    UsageMeter::PerHour => (quantity, 3600, format!("{quantity} s"), "seconds"),
                };
                let amount = rate
                    .mul_div_floor(num as i128, den as i128)
                    .ok_or_else(|| BillingError::AmountOverflow(asset.clone()))?;
                lines.push(InvoiceLine {
                    asset: asset.clone(),
                    metric: metric_name.to_string(),
                    quantity: qty_str,
                    rate: model.to_string(),
                    amount,
                });
            }
        }
    }
    lines.sort_by(|a, b| (&a.asset, &a.metric).cmp(&(&b.asset, &b.metric)));

    let mut total = Money::ZERO;
    for l in &lines {
        total = total
            .checked_add(l.amount)
            .ok_or_else(|| BillingError::AmountOverflow(l.asset.clone()))?;
    }
    Ok(Invoice { period_start: start, period_end: end, lines, total })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counter(asset: &str, metric: UsageMetric, total: u64) -> AggregatedCounter {
        AggregatedCounter {
            window_start: 0,
            window_end: 60,
            asset: AssetId::new(asset).unwrap(),
            metric,
            total,
        }
    }

    fn pay_per_use(rate: Money, metric: UsageMeter) -> PricingModel {
        PricingModel::PayPerUse { rate, metric }
    }

    #[test]
    fn thousand_call_rate() {
        // $1 per thousand calls, 2,500 calls: exactly $2.50.
        let pricing = [(
            AssetId::new("api").unwrap(),
            pay_per_use(Money::from_units(1), UsageMeter::PerThousandCalls),
        )]
        .into();
        let invoice =
            make_invoice(&[counter("api", UsageMetric::Calls, 2500)], &pricing, (0, 3600)).unwrap();
        assert_eq!(invoice.total, Money::from_micro(2_500_000));
    }

    #[test]
    fn hourly_rate() {
        // $5 per hour, 7,200 seconds: exactly $10.00.
        let pricing = [(
            AssetId::new("vm").unwrap(),
            pay_per_use(Money::from_units(5), UsageMeter::PerHour),
        )]
        .into();
        let invoice =
            make_invoice(&[counter("vm", UsageMetric::Seconds, 7200)], &pricing, (0, 86400))
                .unwrap();
        assert_eq!(invoice.total, Money::from_units(10));
    }

    #[test]
    fn megabyte_rate_rounds_once_at_the_line() {
        // $1 per MB over 2,500,001 bytes: floor($2.500001) at the line.
        let pricing = [(
            AssetId::new("pipe").unwrap(),
            pay_per_use(Money::from_units(1), UsageMeter::PerMegabyte),
        )]
        .into();
        let invoice =
            make_invoice(&[counter("pipe", UsageMetric::Bytes, 2_500_001)], &pricing, (0, 60))
                .unwrap();
        assert_eq!(invoice.total, Money::from_micro(2_500_001));
        assert_eq!(invoice.lines[0].quantity, "2.500001 MB");
    }

    #[test]
    fn zero_usage_pay_per_use_is_empty() {
        let pricing = [(
            AssetId::new("api").unwrap(),
            pay_per_use(Money::from_units(1), UsageMeter::PerCall),
        )]
        .into();
        let invoice = make_invoice(&[], &pricing, (0, 60)).unwrap();
        assert!(invoice.lines.is_empty());
        assert_eq!(invoice.total, Money::ZERO);
    }

    #[test]
    fn missing_pricing_is_an_error() {
        let pricing = BTreeMap::new();
        let err = make_invoice(&[counter("ghost", UsageMetric::Calls, 1)], &pricing, (0, 60))
            .unwrap_err();
        assert!(matches!(err, BillingError::MissingPricing(_)));
    }

    #[test]
    fn flat_models_bill_independently_of_counters() {
        let pricing: BTreeMap<_, _> = [
            (AssetId::new("book").unwrap(), PricingModel::PayOnce { price: Money::from_units(3) }),
            (
                AssetId::new("feed").unwrap(),
                PricingModel::Subscription { price: Money::from_units(2), period_s: 100 },
            ),
        ]
        .into();
        let invoice = make_invoice(&[], &pricing, (0, 250)).unwrap();
        assert_eq!(invoice.lines.len(), 2);
        // 250 s over 100 s periods: 3 periods.
        assert_eq!(invoice.total, Money::from_units(3 + 6));
    }

    #[test]
    fn counters_outside_the_period_are_ignored() {
        let pricing = [(
            AssetId::new("api").unwrap(),
            pay_per_use(Money::from_units(1), UsageMeter::PerCall),
        )]
        .into();
        let mut c = counter("api", UsageMetric::Calls, 9);
        c.window_start = 120;
        c.window_end = 180;
        let invoice = make_invoice(&[c], &pricing, (0, 60)).unwrap();
        assert!(invoice.lines.is_empty());
    }
}
