"""Click models: simulators, EM fitting and session logs"""
