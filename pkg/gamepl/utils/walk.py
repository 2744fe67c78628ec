def walk_processes(top, topname='top', topdown=True, ignoreFlag=False):
    """Generator for the recursive tree of gamepl processes.

    Starts walking from process ``top`` and yields every process and
    sub-process managed by it, together with its depth in the tree
    (0 for ``top``, 1 for its subprocesses, and so on).

    Modelled on ``os.walk()``.

    :param top:             top process from where walking should start
    :type top:              :class:`~gamepl.process.process.Process`
    :param str topname:     name of top process [default: 'top']
    :param bool topdown:    yield a parent before its subprocesses
                            [default: True]
    :param bool ignoreFlag: ignore the ``topdown`` flag of every process and
                            always walk top-down [default: False]
    :returns: name (str), proc (process), level (int)

    :Example:

        ::

            >>> from gamepl.utils import walk
            >>> for name, proc, level in walk.walk_processes(model):
            ...     print(name)
            ...
            top
            scheduler
            network
            pseudo

    """
    flag = True if ignoreFlag else topdown
    level = 0
    if flag:
        yield topname, top, level
    if len(top.subprocess) > 0:
        level += 1
        for name, subproc in top.subprocess.items():
            for name2, subproc2, level2 in walk_processes(subproc,
                                                          topname=name,
                                                          topdown=subproc.topdown,
                                                          ignoreFlag=ignoreFlag):
                yield name2, subproc2, level + level2
    if not flag:
        yield topname, top, level


def process_tree(top, name='top'):
    """String representation of the process tree below ``top``,
    one line per process, indented by depth.

    :Example:

        ::

            >>> print(walk.process_tree(model, name='game'))
            game: <class 'gamepl.model.game.G2NetPL'>
               scheduler: <class 'gamepl.player.scheduler.ConfidenceScheduler'>
               network: <class 'gamepl.player.classifier.NetworkPlayer'>
               pseudo: <class 'gamepl.player.pseudo_label.PseudoLabelPlayer'>

    """
    str1 = ''
    for name, proc, level in walk_processes(top, name, ignoreFlag=True):
        indent = ' ' * 3 * level
        str1 += '{}{}: {}\n'.format(indent, name, type(proc))
    return str1
