"""Protocol behaviour: chains, attestation, control contracts and the coordinator."""
