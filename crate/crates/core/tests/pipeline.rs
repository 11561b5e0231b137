use nebb::engine::{Network, SimConfig};
use nebb::metrics::packet_zero_load_latency;
use nebb::model::Mechanism;
use nebb::topology::{NetworkShape, TopologyKind};

fn idle_config(mechanism: Mechanism) -> SimConfig {
    SimConfig {
        mechanism,
        cycles: 10_000,
        warmup_fraction: 0.0,
        check: true,
        ..SimConfig::default()
    }
}

/// Latency of one packet sent alone through an idle network.
fn lone_packet(cfg: &SimConfig, src: u32, dst: u32, size: u16) -> (u64, u64, u64) {
    let mut net = Network::with_shape(cfg.clone(), cfg.shape()).unwrap();
    net.enqueue(src, dst, size);
    assert!(net.run_until_drained(1_000).unwrap());
    let r = net.report();
    assert_eq!(r.packets_measured, 1);
    (
        r.avg_packet_latency as u64,
        r.buffered_hops,
        r.bypassed_wh + r.bypassed_vct,
    )
}

#[test]
fn lone_packets_bypass_every_transit_hop() {
    for m in Mechanism::ALL {
        let cfg = idle_config(m);
        let shape = cfg.shape();
        for (src, dst) in [(0u32, 4u32), (0, 255), (37, 200), (255, 0), (5, 6)] {
            for size in [1u16, 5] {
                let h = shape.hops(shape.router_of(src), shape.router_of(dst));
                let (lat, buffered, bypassed) = lone_packet(&cfg, src, dst, size);
                assert_eq!(
                    lat as f64,
                    packet_zero_load_latency(h, size),
                    "{m} {src}->{dst} size {size}"
                );
                assert_eq!(buffered, 0, "{m} {src}->{dst}");
                assert_eq!(bypassed, h as u64 * size as u64, "{m} {src}->{dst}");
            }
        }
    }
}

#[test]
fn torus_lone_packets_take_the_short_way() {
    for m in [
        Mechanism::NebbHybrid,
        Mechanism::WhBaseline,
        Mechanism::EmptyVc,
        Mechanism::NebbVct,
    ] {
        let cfg = SimConfig {
            topology: TopologyKind::Torus,
            ..idle_config(m)
        };
        let shape = NetworkShape::new(TopologyKind::Torus, 8, 4);
        for (src, dst) in [(0u32, 255u32), (0, 28), (100, 3)] {
            let h = shape.hops(shape.router_of(src), shape.router_of(dst));
            let (lat, _, _) = lone_packet(&cfg, src, dst, 5);
            assert_eq!(
                lat as f64,
                packet_zero_load_latency(h, 5),
                "{m} {src}->{dst}"
            );
        }
    }
}
