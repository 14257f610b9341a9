"""Central finite differences of J_final for every parameter group."""
import numpy as np

from tabintent.model.features import collate
from tabintent.model.loss import compute_loss, loss_and_grads
from tabintent.model.network import backward, forward, init_params

# Groups whose true gradient is identically zero (the key bias shifts every
# attention score of a query equally and softmax ignores the shift) have
# analytic and numeric norms of pure round-off; the floor keeps their ratio
# meaningful instead of 0/0.
NORM_FLOOR = 1e-6
# A central difference that straddles a ReLU kink measures a different
# function; such elements are retried with a smaller step.
MIN_STEP = 1e-9


def batch_for(examples, config):
    return collate(examples, config.e, config.ablation)


def relative_errors(config, mode, examples, pos_weights=None, h=1e-5, seed=3):
    params = init_params(config, mode, seed=seed, head_scale=0.5)
    batch = batch_for(examples, config)
    masks = {"reference": batch.rest_mask}
    w = config.effective_weights()

    def J():
        logits, cache = forward(params, config, batch)
        signs = np.concatenate([(c[4] > 0).ravel() for c in cache[2][0]])
        return compute_loss(logits, batch.labels, w, pos_weights, masks)[0], signs

    _, base = J()

    logits, cache = forward(params, config, batch)
    _, _, dlogits = loss_and_grads(logits, batch.labels, w, pos_weights, masks)
    grads = backward(params, config, batch, cache, dlogits)
    out = {}
    for name in sorted(params):
        P = params[name]
        num = np.zeros_like(P)
        it = np.nditer(P, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            old = P[i]
            step = h
            while True:
                P[i] = old + step
                jp, sp = J()
                P[i] = old - step
                jm, sm = J()
                P[i] = old
                if (np.array_equal(sp, base) and np.array_equal(sm, base)) or step <= MIN_STEP:
                    break
                step /= 10
            num[i] = (jp - jm) / (2 * step)
        a = grads[name]
        den = max(np.linalg.norm(a) + np.linalg.norm(num), NORM_FLOOR)
        out[name] = float(np.linalg.norm(a - num) / den)
    return out
