import os
import unittest

from evactrace.store import filestore
from evactrace.test.support import CatchLogs, TempDirMixin


class Boom(Exception):
    pass


class AtomicWriteTest(TempDirMixin, unittest.TestCase):
    def test_write(self):
        path = self.tmpPath('sub', 'out.txt')
        with filestore.atomicWrite(path) as f:
            f.write(b'hello\n')
        with open(path, 'rb') as f:
            self.assertEqual(b'hello\n', f.read())

    def test_text(self):
        path = self.tmpPath('out.txt')
        with filestore.atomicWrite(path, text=True) as f:
            f.write(u'caf\xe9\n')
        with open(path, 'rb') as f:
            self.assertEqual(b'caf\xc3\xa9\n', f.read())

    def test_failureLeavesNothing(self):
        path = self.tmpPath('out.txt')
        with self.assertRaises(Boom):
            with filestore.atomicWrite(path) as f:
                f.write(b'partial')
                raise Boom()
        self.assertEqual([], os.listdir(self.tmpdir))

    def test_failureKeepsOldFile(self):
        path = self.tmpPath('out.txt')
        with filestore.atomicWrite(path) as f:
            f.write(b'old')
        with self.assertRaises(Boom):
            with filestore.atomicWrite(path) as f:
                f.write(b'new')
                raise Boom()
        with open(path, 'rb') as f:
            self.assertEqual(b'old', f.read())
        self.assertEqual(['out.txt'], os.listdir(self.tmpdir))


class OutputStoreTest(TempDirMixin, CatchLogs, unittest.TestCase):
    def setUp(self):
        TempDirMixin.setUp(self)
        CatchLogs.setUp(self)
        self.store = filestore.OutputStore(self.tmpPath('run'))

    def tearDown(self):
        CatchLogs.tearDown(self)
        TempDirMixin.tearDown(self)

    def test_written(self):
        self.store.writeBytes('b.txt', b'b')
        with self.store.open('a.txt', text=True) as f:
            f.write(u'a')
        self.store.writeBytes('b.txt', b'bb')
        self.assertEqual(['b.txt', 'a.txt'], self.store.written)
        self.assertEqual(os.path.join(self.tmpdir, 'run', 'a.txt'),
                         self.store.path('a.txt'))

    def test_failedStageRemovesItsFiles(self):
        self.store.writeBytes('before.txt', b'x')
        with self.assertRaises(Boom):
            with self.store.stage('classify'):
                self.store.writeBytes('one.txt', b'1')
                self.store.writeBytes('two.txt', b'2')
                raise Boom()
        self.assertEqual(['before.txt'], self.store.written)
        self.assertEqual(['before.txt'],
                         sorted(os.listdir(self.store.directory)))
        self.assertEqual(2, len(self.logged(name='evactrace.store.filestore')))

    def test_nestedStage(self):
        with self.assertRaises(Boom):
            with self.store.stage('outer'):
                with self.store.stage('inner'):
                    self.store.writeBytes('inner.txt', b'1')
                self.store.writeBytes('outer.txt', b'2')
                raise Boom()
        self.assertEqual([], os.listdir(self.store.directory))

    def test_successfulStageKeepsFiles(self):
        with self.store.stage('clean'):
            self.store.writeBytes('one.txt', b'1')
        self.assertEqual(['one.txt'], self.store.written)

    def test_remove(self):
        self.store.writeBytes('one.txt', b'1')
        self.assertTrue(self.store.remove('one.txt'))
        self.assertFalse(self.store.remove('one.txt'))
        self.assertEqual([], self.store.written)

    def test_directoryIsFile(self):
        path = self.tmpPath('file')
        with open(path, 'w') as f:
            f.write('x')
        self.assertRaises(OSError, filestore.OutputStore, path)


if __name__ == '__main__':
    unittest.main()
