use super::{parse_scenario, Scenario};

pub const BUILTIN_NAMES: &[&str] = &["example1", "example2"];

/// Chain Sw1 -> Sw2 -> Sw3 -> Sw4. The multipoint VC M collects S1, S2 and S3
/// at successive switches; the point-to-point VC A joins at Sw3 so that all
/// four sources share LINK3.
const EXAMPLE1: &str = "\
# Four switches in a chain, every link 150 Mbps.
switch Sw1
switch Sw2
switch Sw3
switch Sw4

link LINK1 sw:Sw1:1 sw:Sw2:1 150
link LINK2 sw:Sw2:2 sw:Sw3:1 150
link LINK3 sw:Sw3:2 sw:Sw4:1 150
link acc_S1 src:S1 sw:Sw1:0 150
link acc_S2 src:S2 sw:Sw2:0 150
link acc_S3 src:S3 sw:Sw3:0 150
link acc_SA src:SA sw:Sw3:3 150
link egr_dS1 sw:Sw4:2 dst:dS1 150
link egr_dSA sw:Sw4:3 dst:dSA 150

vc M dst dS1 sources S1,S2,S3
vc A dst dSA sources SA

route M Sw1 0 -> 1
route M Sw2 0 -> 2
route M Sw2 1 -> 2
route M Sw3 0 -> 2
route M Sw3 1 -> 2
route M Sw4 1 -> 2
route A Sw3 3 -> 2
route A Sw4 1 -> 3
";

/// Same chain with a 50 Mbps LINK1. S1, S2 and SA enter at Sw1, S3 at Sw2,
/// S4 at Sw3; SA leaves at Sw3 and never reaches LINK3.
const EXAMPLE2: &str = "\
# Four switches in a chain; LINK1 is 50 Mbps, everything else 150 Mbps.
switch Sw1
switch Sw2
switch Sw3
switch Sw4

link LINK1 sw:Sw1:1 sw:Sw2:1 50
link LINK2 sw:Sw2:2 sw:Sw3:1 150
link LINK3 sw:Sw3:2 sw:Sw4:1 150
link acc_S1 src:S1 sw:Sw1:0 150
link acc_S2 src:S2 sw:Sw1:2 150
link acc_SA src:SA sw:Sw1:3 150
link acc_S3 src:S3 sw:Sw2:0 150
link acc_S4 src:S4 sw:Sw3:0 150
link egr_dS1 sw:Sw4:2 dst:dS1 150
link egr_dSA sw:Sw3:3 dst:dSA 150

vc M dst dS1 sources S1,S2,S3,S4
vc A dst dSA sources SA

route M Sw1 0 -> 1
route M Sw1 2 -> 1
route M Sw2 0 -> 2
route M Sw2 1 -> 2
route M Sw3 0 -> 2
route M Sw3 1 -> 2
route M Sw4 1 -> 2
route A Sw1 3 -> 1
route A Sw2 1 -> 2
route A Sw3 1 -> 3
";

/// Built-in scenario text by name.
pub fn builtin_text(name: &str) -> Option<&'static str> {
    match name {
        "example1" => Some(EXAMPLE1),
        "example2" => Some(EXAMPLE2),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown built-in scenario `{0}` (available: example1, example2)")]
pub struct UnknownScenario(pub String);

pub fn builtin_scenario(name: &str) -> Result<Scenario, UnknownScenario> {
    let text = builtin_text(name).ok_or_else(|| UnknownScenario(name.to_string()))?;
    Ok(parse_scenario(text).expect("built-in scenarios parse"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rate::Rate;
    use crate::topology::LinkId;

    #[test]
    fn example1_shape() {
        let s = builtin_scenario("example1").unwrap();
        let net = s.network().unwrap();
        assert_eq!(net.topology().switch_count(), 4);
        assert_eq!(net.vcs().len(), 2);
        let link3 = net.topology().link(&LinkId::from("LINK3")).unwrap();
        assert_eq!(link3.capacity, Rate::from_integer(150));
        assert_eq!(net.count_flows(&LinkId::from("LINK3")).unwrap(), 3);
    }

    #[test]
    fn example2_shape() {
        let net = builtin_scenario("example2").unwrap().network().unwrap();
        assert_eq!(net.sources().len(), 5);
        assert_eq!(net.vcs().len(), 2);
        for l in net.topology().links() {
            let expected = if l.id.as_str() == "LINK1" { 50 } else { 150 };
            assert_eq!(l.capacity, Rate::from_integer(expected), "{}", l.id);
        }
    }

    #[test]
    fn unknown_name() {
        assert!(builtin_scenario("example3").is_err());
    }
}
