mod common;

use automn_core::dmh::{
    run_dmh, BlockSpec, ChainStreams, DmhConfig, DmhKernel, PreparedProposal, ProposalSpec,
};
use automn_core::oracle::ExactModel;
use automn_core::rng::uniform;
use automn_core::{Arrangement, Params, PriorSpec};
use common::*;

fn data() -> Arrangement {
    Arrangement::from_zero_based(vec![0, 0, 1, 0, 1, 1, 0, 1, 1])
}

/// With many inner sweeps the auxiliary draw is effectively exact, so DMH
/// accepts at the rate of the exchange algorithm run with exact draws from
/// the enumerated distribution. That rate sits below the exact-likelihood MH
/// rate (the auxiliary variable adds noise to the ratio), which is checked
/// as well.
#[test]
fn long_inner_chain_matches_exact_exchange_acceptance() {
    let spec = grid_spec(3, 3, 2, None);
    let y = data();
    let exact = ExactModel::new(&spec).unwrap();
    let s_y = spec.suff_stats(&y).unwrap();
    let prior = PriorSpec::default_for(2);
    let blocks = BlockSpec::by_class(1, 2);
    let proposals = ProposalSpec::isotropic(&blocks, 0.6);
    let prepared: Vec<PreparedProposal> = proposals
        .blocks
        .iter()
        .zip(&blocks.blocks)
        .map(|(p, idx)| PreparedProposal::new(p, idx).unwrap())
        .collect();
    let steps = 50_000;
    let total = (2 * steps) as f64;

    let mut kernel = DmhKernel::new(&spec, &y).unwrap();
    let mut streams = ChainStreams::for_chain(21, 0);
    let mut theta = Params::zeros(1, 2);
    let mut dmh_accepts = 0usize;
    for _ in 0..steps {
        for prop in &prepared {
            let out = kernel.step(&theta, prop, &prior, 200, &mut streams).unwrap();
            dmh_accepts += usize::from(out.accepted);
            theta = out.theta;
        }
    }

    // exchange algorithm with z drawn exactly by inverting the enumerated CDF
    let mut streams = ChainStreams::for_chain(21, 0);
    let mut theta = Params::zeros(1, 2);
    let mut exchange_accepts = 0usize;
    for _ in 0..steps {
        for prop in &prepared {
            let cand = prop.propose(&theta, &mut streams.proposal);
            let u = uniform(&mut streams.proposal);
            let dist = exact.distribution(&cand);
            let v = uniform(&mut streams.aux);
            let mut acc = 0.0;
            let mut idx = dist.log_probs.len() - 1;
            for (i, lp) in dist.log_probs.iter().enumerate() {
                acc += lp.exp();
                if v < acc {
                    idx = i;
                    break;
                }
            }
            let s_z = exact.stats(idx);
            let log_alpha = prior.log_density(cand.as_slice()) - prior.log_density(theta.as_slice())
                + (0..2)
                    .map(|j| (cand.as_slice()[j] - theta.as_slice()[j]) * (s_y.as_slice()[j] - s_z[j]))
                    .sum::<f64>();
            if u.ln() < log_alpha {
                theta = cand;
                exchange_accepts += 1;
            }
        }
    }

    // exact-likelihood MH on the same proposal stream
    let mut streams = ChainStreams::for_chain(21, 0);
    let mut theta = Params::zeros(1, 2);
    let log_post = |t: &Params| {
        prior.log_density(t.as_slice()) + spec.log_unnormalized(t, &y).unwrap() - exact.log_z(t)
    };
    let mut current = log_post(&theta);
    let mut mh_accepts = 0usize;
    for _ in 0..steps {
        for prop in &prepared {
            let cand = prop.propose(&theta, &mut streams.proposal);
            let u = uniform(&mut streams.proposal);
            let next = log_post(&cand);
            if u.ln() < next - current {
                theta = cand;
                current = next;
                mh_accepts += 1;
            }
        }
    }

    let dmh = dmh_accepts as f64 / total;
    let exchange = exchange_accepts as f64 / total;
    let mh = mh_accepts as f64 / total;
    assert!((dmh - exchange).abs() <= 0.03, "DMH {dmh} vs exchange {exchange}");
    assert!(exchange < mh, "exchange {exchange} vs MH {mh}");
}

#[test]
fn chains_are_bit_identical() {
    let spec = grid_spec(3, 3, 3, None);
    let y = Arrangement::from_zero_based(vec![0, 1, 2, 1, 1, 2, 0, 0, 2]);
    let blocks = BlockSpec::by_class(1, 3);
    let config = DmhConfig {
        outer_iterations: 300,
        burn_in: 100,
        thin: 4,
        inner_sweeps: 5,
        seed: 77,
        chain: 2,
        proposals: ProposalSpec::isotropic(&blocks, 0.3),
        blocks,
        prior: PriorSpec::default_for(3),
    };
    let a = run_dmh(&spec, &y, &config, &Params::zeros(1, 3), None).unwrap();
    let b = run_dmh(&spec, &y, &config, &Params::zeros(1, 3), None).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.n_draws(), 50);
    assert!(a.acceptance_rates().iter().all(|r| (0.0..=1.0).contains(r)));
    let other = run_dmh(&spec, &y, &DmhConfig { chain: 3, ..config }, &Params::zeros(1, 3), None).unwrap();
    assert_ne!(a.draws, other.draws);
}
