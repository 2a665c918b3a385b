"""phcclab: a discrete-event laboratory for the PHCC TCP congestion controller.

The package is organised bottom-up:

* :mod:`phcclab.sim` - event engine, links, drop-tail queues, dumbbell wiring
* :mod:`phcclab.tcp` - reliable transfer, RTT/RTO, loss detection, controller contract
* :mod:`phcclab.bayes` - Bayesian delay/loss probability estimation
* :mod:`phcclab.phcc` - the PHCC controller
* :mod:`phcclab.baselines` - Reno, Vegas and HighSpeed TCP
* :mod:`phcclab.metrics` - throughput, utilization, fairness, queue statistics
* :mod:`phcclab.scenario` / :mod:`phcclab.experiment` / :mod:`phcclab.cli` - harness
"""

__version__ = "0.1.0"
