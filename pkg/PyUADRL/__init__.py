'''
PyUADRL: uncertainty-decomposed distributional reinforcement learning
on tabular MDPs.
'''


def _git_version():
    '''Version from `git describe` of the work tree (PEP440 form without
    the commit hash), None outside a git checkout.'''
    import os, subprocess
    worktree = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    try:
        with open(os.devnull, 'w') as devnull:
            described = subprocess.check_output(
                ['git', '--git-dir=' + worktree + '/.git/',
                 '--work-tree=' + worktree,
                 'describe', '--long', '--dirty', '--abbrev=10', '--tags'],
                stderr=devnull)
    except (OSError, subprocess.CalledProcessError):
        return None, False
    parts = described.decode('utf-8').rstrip()[1:].split('-')
    version = parts[0]
    if parts[1] != '0':
        version += '.' + parts[1]
    return version, 'dirty' in parts[-1]


__version__, dirty = _git_version()
DYNAMIC_VERSIONING = __version__ is not None
if not DYNAMIC_VERSIONING:
    from ._version import __version__
