use crate::names::NameComponent;
use crate::packets::{make_notification_interest, Interest, SERVICE_LUMINOSITY};
use crate::time::VirtualTime;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LuminosityConfig {
    pub period_ms: u64,
    pub lifetime_ms: u64,
    pub location_path: Vec<NameComponent>,
}

impl LuminosityConfig {
    pub fn new(location_path: Vec<NameComponent>) -> Self {
        Self {
            period_ms: 5000,
            lifetime_ms: 2000,
            location_path,
        }
    }
}

/// `lux=<value>`
pub fn lux_component(lux: u32) -> NameComponent {
    NameComponent::new(format!("lux={lux}")).expect("non-empty")
}

pub fn parse_lux(component: &NameComponent) -> Option<u32> {
    component.as_str().strip_prefix("lux=")?.parse().ok()
}

/// One periodic reading, pushed as a notification. Nothing is retained:
/// readings are not acknowledged.
pub fn luminosity_tick(cfg: &LuminosityConfig, lux: u32, now: VirtualTime, nonce: u32) -> Interest {
    let service = NameComponent::new(SERVICE_LUMINOSITY).expect("static");
    make_notification_interest(
        &service,
        &cfg.location_path,
        &[lux_component(lux)],
        now,
        cfg.lifetime_ms,
        nonce,
    )
}
