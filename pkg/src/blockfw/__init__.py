"""Block factor-width-two cones and their use in SDP and SOS programs."""
