'''
@date:    19/10/2026
@brief:   HDF5 checkpoints of anchored ensembles.

Layout of a checkpoint file:

    attrs    format_version, shape (K, S, A, N), anchor_strength,
             prior_mean, prior_std, train_config (JSON),
             experiment_config (JSON, may be empty), payload_sha256
    taus     (N,)
    anchors  (K, S, A, N)
    members  (K, S, A, N)

payload_sha256 covers the header values and the raw bytes of the three
datasets; a file whose content does not reproduce it is corrupt.
'''

import hashlib
import json

import h5py as hp
import numpy as np

from PyUADRL.qr_ensemble.ensemble import AnchoredEnsemble
from PyUADRL.qr_ensemble.training import TrainConfig


FORMAT_VERSION = 1


class FormatVersionMismatch(ValueError):
    '''Raise if a checkpoint has another format version or does not fit
    the environment it is evaluated against.'''
    def __init__(self, message):
        super(FormatVersionMismatch, self).__init__(message)
        self.message = message


class CorruptFile(OSError):
    '''Raise if a checkpoint cannot be read or fails its payload hash.'''
    def __init__(self, message):
        super(CorruptFile, self).__init__(message)
        self.message = message


def payload_digest(shape, anchor_strength, prior_mean, prior_std, taus,
                   anchors, members):
    header = json.dumps({'shape': [int(x) for x in shape],
                         'anchor_strength': float(anchor_strength),
                         'prior_mean': float(prior_mean),
                         'prior_std': float(prior_std)}, sort_keys=True)
    digest = hashlib.sha256(header.encode('utf-8'))
    for array in (taus, anchors, members):
        digest.update(np.ascontiguousarray(array, dtype='<f8').tobytes())
    return digest.hexdigest()


def ensemble_digest(ens):
    '''Payload digest of an in-memory ensemble.'''
    return payload_digest(ens.shape, ens.anchor_strength, ens.prior_mean,
                          ens.prior_std, ens.taus, ens.anchors, ens.values)


def export_checkpoint(ens, filename, cfg=None, experiment=None):
    '''Write ens (and the TrainConfig / experiment config document it was
    trained with) to filename. Returns the payload digest.'''
    digest = ensemble_digest(ens)
    with hp.File(filename, 'w') as h5file:
        h5file.attrs['format_version'] = FORMAT_VERSION
        h5file.attrs['shape'] = np.array(ens.shape, dtype=np.int64)
        h5file.attrs['anchor_strength'] = ens.anchor_strength
        h5file.attrs['prior_mean'] = ens.prior_mean
        h5file.attrs['prior_std'] = ens.prior_std
        h5file.attrs['train_config'] = json.dumps(
            {} if cfg is None else cfg.to_dict(), sort_keys=True)
        h5file.attrs['experiment_config'] = json.dumps(
            {} if experiment is None else experiment, sort_keys=True)
        h5file.attrs['payload_sha256'] = digest
        for name, array in (('taus', ens.taus), ('anchors', ens.anchors),
                            ('members', ens.values)):
            h5file.create_dataset(name, data=np.asarray(array, dtype='<f8'),
                                  track_times=False)
    return digest


def _attr_str(value):
    return value.decode('utf-8') if isinstance(value, bytes) else str(value)


def read_checkpoint(filename):
    '''Return (ensemble, train_config or None, experiment document or
    None) after checking format version and payload hash.'''
    try:
        with hp.File(filename, 'r') as h5file:
            attrs = dict(h5file.attrs)
            version = int(attrs['format_version'])
            if version != FORMAT_VERSION:
                raise FormatVersionMismatch(
                    'checkpoint format version {} (expected {})'.format(
                        version, FORMAT_VERSION))
            taus = h5file['taus'][()]
            anchors = h5file['anchors'][()]
            members = h5file['members'][()]
    except (FormatVersionMismatch, CorruptFile):
        raise
    except (OSError, KeyError, ValueError, TypeError) as err:
        raise CorruptFile('cannot read checkpoint {}: {}'.format(filename,
                                                                 err))
    try:
        shape = tuple(int(x) for x in attrs['shape'])
        strength = float(attrs['anchor_strength'])
        prior_mean = float(attrs['prior_mean'])
        prior_std = float(attrs['prior_std'])
        stored_digest = _attr_str(attrs['payload_sha256'])
        train_doc = json.loads(_attr_str(attrs['train_config']))
        experiment_doc = json.loads(_attr_str(attrs['experiment_config']))
    except (KeyError, ValueError, TypeError) as err:
        raise CorruptFile('checkpoint {} has a broken header: {}'.format(
            filename, err))
    if anchors.shape != shape or members.shape != shape:
        raise CorruptFile('checkpoint {}: arrays do not match the header '
                          'shape'.format(filename))
    digest = payload_digest(shape, strength, prior_mean, prior_std, taus,
                            anchors, members)
    if digest != stored_digest:
        raise CorruptFile('checkpoint {}: payload hash mismatch'.format(
            filename))
    ensemble = AnchoredEnsemble(anchors, anchor_strength=strength,
                                prior_mean=prior_mean, prior_std=prior_std,
                                values=members, allow_single=shape[0] < 2)
    train_config = TrainConfig.from_dict(train_doc) if train_doc else None
    return ensemble, train_config, (experiment_doc or None)


def import_checkpoint(filename, mdp=None):
    '''Load the ensemble of a checkpoint, bit-identical to the exported
    one. If mdp is given, the ensemble must match its state and action
    counts.'''
    ensemble = read_checkpoint(filename)[0]
    check_fits(ensemble, mdp)
    return ensemble


def check_fits(ensemble, mdp):
    if mdp is not None and ensemble.shape[1:3] != (mdp.n_states,
                                                   mdp.n_actions):
        raise FormatVersionMismatch(
            'checkpoint of {} states x {} actions does not fit an MDP of '
            '{} x {}'.format(ensemble.shape[1], ensemble.shape[2],
                             mdp.n_states, mdp.n_actions))
